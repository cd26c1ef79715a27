//! Per-episode trace analyses and distribution summaries.

use serde::{Deserialize, Serialize};

use crate::physics::NO_FACE;

/// Counts changes of the contacted face over a per-step face trace
/// (`NO_FACE` while out of contact). Breaking contact and returning to the
/// same face is not a switch.
pub fn count_face_switches(trace: &[i32]) -> u32 {
    let mut last: Option<i32> = None;
    let mut switches = 0;
    for &f in trace {
        if f == NO_FACE {
            continue;
        }
        if let Some(prev) = last {
            if prev != f {
                switches += 1;
            }
        }
        last = Some(f);
    }
    switches
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of sorted data, interpolating between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// `None` for an empty sample.
pub fn quartiles(samples: &[f64]) -> Option<Quartiles> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Some(Quartiles {
        count: s.len(),
        min: s[0],
        q1: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q3: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
    })
}
