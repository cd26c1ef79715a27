//! Per-step trajectory dumps and their CSV rendering.
//!
//! A dump is JSON Lines: a header object
//! `{"format":"catpush-trajectory","version":1,"provenance":{..},"episode":k}`
//! followed by one [`TrajectoryRecord`] object per step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{ConstraintKind, NUM_IMPLEMENTED};
use crate::formats::Provenance;
use crate::task::TaskStep;

pub const TRAJECTORY_FORMAT: &str = "catpush-trajectory";
pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format: String,
    pub version: u32,
    pub provenance: Provenance,
    pub episode: usize,
}

impl TrajectoryHeader {
    pub fn new(provenance: Provenance, episode: usize) -> Self {
        Self {
            format: TRAJECTORY_FORMAT.to_string(),
            version: TRAJECTORY_VERSION,
            provenance,
            episode,
        }
    }
}

/// World state and evaluation signals after one control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub time: f64,
    pub object_x: f64,
    pub object_y: f64,
    pub object_yaw: f64,
    pub tilt_angle: f64,
    pub tilt_axis_yaw: f64,
    pub toppled: bool,
    pub base_x: f64,
    pub base_y: f64,
    pub base_yaw: f64,
    pub base_height: f64,
    pub ee_x: f64,
    pub ee_y: f64,
    pub ee_z: f64,
    pub in_contact: bool,
    pub contact_face: i32,
    pub reward: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub delta: f64,
    pub violated: [bool; NUM_IMPLEMENTED],
}

impl TrajectoryRecord {
    pub fn from_step(out: &TaskStep, dt: f64) -> Self {
        let tr = &out.transition;
        let o = &tr.object;
        let r = &tr.robot;
        Self {
            step: tr.step,
            time: tr.step as f64 * dt,
            object_x: o.pose.x,
            object_y: o.pose.y,
            object_yaw: o.pose.yaw,
            tilt_angle: o.tilt.angle,
            tilt_axis_yaw: o.tilt.axis_yaw,
            toppled: o.toppled,
            base_x: r.base_pose.x,
            base_y: r.base_pose.y,
            base_yaw: r.base_pose.yaw,
            base_height: r.base_height,
            ee_x: r.ee_pos_world.x,
            ee_y: r.ee_pos_world.y,
            ee_z: r.ee_pos_world.z,
            in_contact: tr.contact.in_contact,
            contact_face: tr.contact.face_index,
            reward: out.reward,
            r1: out.terms.r1,
            r2: out.terms.r2,
            r3: out.terms.r3,
            r4: out.terms.r4,
            delta: out.report.delta,
            violated: out.report.violated,
        }
    }

    pub fn csv_header() -> String {
        let mut cols: Vec<String> = [
            "step",
            "time",
            "object_x",
            "object_y",
            "object_yaw",
            "tilt_angle",
            "tilt_axis_yaw",
            "toppled",
            "base_x",
            "base_y",
            "base_yaw",
            "base_height",
            "ee_x",
            "ee_y",
            "ee_z",
            "in_contact",
            "contact_face",
            "reward",
            "r1",
            "r2",
            "r3",
            "r4",
            "delta",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend(
            ConstraintKind::IMPLEMENTED
                .iter()
                .map(|k| format!("viol_{}", k.name())),
        );
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let b = |v: bool| if v { "1" } else { "0" }.to_string();
        let mut v = vec![self.step.to_string(), self.time.to_string()];
        for x in [
            self.object_x,
            self.object_y,
            self.object_yaw,
            self.tilt_angle,
            self.tilt_axis_yaw,
        ] {
            v.push(x.to_string());
        }
        v.push(b(self.toppled));
        for x in [
            self.base_x,
            self.base_y,
            self.base_yaw,
            self.base_height,
            self.ee_x,
            self.ee_y,
            self.ee_z,
        ] {
            v.push(x.to_string());
        }
        v.push(b(self.in_contact));
        v.push(self.contact_face.to_string());
        for x in [self.reward, self.r1, self.r2, self.r3, self.r4, self.delta] {
            v.push(x.to_string());
        }
        v.extend(self.violated.iter().map(|x| b(*x)));
        v.join(",")
    }

    /// Parses a row produced by [`TrajectoryRecord::csv_row`].
    pub fn from_csv_row(row: &str) -> Result<Self, String> {
        let cells: Vec<&str> = row.split(',').collect();
        let expected = 23 + NUM_IMPLEMENTED;
        if cells.len() != expected {
            return Err(format!(
                "expected {expected} columns, found {}",
                cells.len()
            ));
        }
        let mut it = cells.into_iter();
        let mut next = || it.next().expect("column count checked");
        let f = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
        let b = |s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(format!("`{s}` is not 0 or 1")),
        };
        let step = next().parse::<usize>().map_err(|e| e.to_string())?;
        let time = f(next())?;
        let [object_x, object_y, object_yaw, tilt_angle, tilt_axis_yaw] =
            [f(next())?, f(next())?, f(next())?, f(next())?, f(next())?];
        let toppled = b(next())?;
        let [base_x, base_y, base_yaw, base_height, ee_x, ee_y, ee_z] = [
            f(next())?,
            f(next())?,
            f(next())?,
            f(next())?,
            f(next())?,
            f(next())?,
            f(next())?,
        ];
        let in_contact = b(next())?;
        let contact_face = next().parse::<i32>().map_err(|e| e.to_string())?;
        let [reward, r1, r2, r3, r4, delta] = [
            f(next())?,
            f(next())?,
            f(next())?,
            f(next())?,
            f(next())?,
            f(next())?,
        ];
        let mut violated = [false; NUM_IMPLEMENTED];
        for v in &mut violated {
            *v = b(next())?;
        }
        Ok(Self {
            step,
            time,
            object_x,
            object_y,
            object_yaw,
            tilt_angle,
            tilt_axis_yaw,
            toppled,
            base_x,
            base_y,
            base_yaw,
            base_height,
            ee_x,
            ee_y,
            ee_z,
            in_contact,
            contact_face,
            reward,
            r1,
            r2,
            r3,
            r4,
            delta,
            violated,
        })
    }
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory file is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported trajectory format `{format}` version {version}")]
    Format { format: String, version: u32 },
}

/// Serialises a header and records as JSON Lines.
pub fn write_dump(header: &TrajectoryHeader, records: &[TrajectoryRecord]) -> String {
    let mut out = serde_json::to_string(header).expect("header serialises");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialises"));
        out.push('\n');
    }
    out
}

pub fn read_dump(text: &str) -> Result<(TrajectoryHeader, Vec<TrajectoryRecord>), TrajectoryError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(TrajectoryError::Empty)?;
    let header: TrajectoryHeader =
        serde_json::from_str(first).map_err(|e| TrajectoryError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
    if header.format != TRAJECTORY_FORMAT || header.version != TRAJECTORY_VERSION {
        return Err(TrajectoryError::Format {
            format: header.format,
            version: header.version,
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let r: TrajectoryRecord =
            serde_json::from_str(line).map_err(|e| TrajectoryError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(r);
    }
    Ok((header, records))
}

/// CSV rendering with a provenance comment line.
pub fn to_csv(header: &TrajectoryHeader, records: &[TrajectoryRecord]) -> String {
    let mut out = header.provenance.csv_comment();
    out.push('\n');
    out.push_str(&TrajectoryRecord::csv_header());
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Parses CSV produced by [`to_csv`] back into records.
pub fn from_csv(
    text: &str,
) -> Result<(Option<Provenance>, Vec<TrajectoryRecord>), TrajectoryError> {
    let provenance = text.lines().next().and_then(Provenance::parse_csv_comment);
    let mut body = crate::formats::csv_body(text).enumerate();
    let header_line = text.lines().take_while(|l| l.starts_with('#')).count() + 1;
    match body.next() {
        Some((_, h)) if h == TrajectoryRecord::csv_header() => {}
        _ => {
            return Err(TrajectoryError::Parse {
                line: header_line,
                message: "missing column header".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (i, row) in body.filter(|(_, l)| !l.is_empty()) {
        let r = TrajectoryRecord::from_csv_row(row).map_err(|message| TrajectoryError::Parse {
            line: header_line + i,
            message,
        })?;
        records.push(r);
    }
    Ok((provenance, records))
}
