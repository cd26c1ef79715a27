//! Support-edge tipping.
//!
//! A horizontal push `F` at height `h_c` tips the object about the support
//! edge farthest along the push once `F h_c` exceeds the gravitational
//! restoring moment `m g b`. Ground friction caps the force the object can
//! transmit at `μ m g`, so tipping is only reachable when `h_c > b / μ`;
//! otherwise the object slides first.

use nalgebra::Vector2;

use super::contact::ContactInfo;
use super::object::{ObjectParams, ObjectState, Shape, Tilt};
use super::pushing::contact_force;
use super::world::WorldConfig;

/// Lever arms for one tipping direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipGeometry {
    /// Horizontal distance from the support edge to the CoM projection.
    pub lever: f64,
    pub com_height: f64,
}

impl TipGeometry {
    pub fn topple_angle(&self) -> f64 {
        (self.lever / self.com_height).atan()
    }

    /// Gravitational moment about the edge at inclination `angle`
    /// (positive = restoring).
    pub fn restoring_moment(&self, params: &ObjectParams, gravity: f64, angle: f64) -> f64 {
        params.mass * gravity * (self.lever * angle.cos() - self.com_height * angle.sin())
    }
}

/// Lever geometry for tipping toward the world heading `axis_yaw`.
pub fn tip_geometry(params: &ObjectParams, state: &ObjectState, axis_yaw: f64) -> TipGeometry {
    let rel = axis_yaw - state.pose.yaw;
    let dir = Vector2::new(rel.cos(), rel.sin());
    let extent = params.support_extent(dir);
    TipGeometry {
        lever: extent - params.com_offset.xy().dot(&dir),
        com_height: params.com_height(),
    }
}

/// Tipping direction for a horizontal push direction `push` (world, unit).
/// Cuboids tip about a base edge, so the direction snaps to the nearest body
/// axis.
pub fn tipping_heading(params: &ObjectParams, state: &ObjectState, push: Vector2<f64>) -> f64 {
    let heading = push.y.atan2(push.x);
    match params.shape {
        Shape::Cylinder => heading,
        Shape::Cuboid => {
            let rel = heading - state.pose.yaw;
            let quarter = std::f64::consts::FRAC_PI_2;
            state.pose.yaw + (rel / quarter).round() * quarter
        }
    }
}

/// Topple angle for the current tilt axis.
pub fn topple_angle(params: &ObjectParams, state: &ObjectState) -> f64 {
    tip_geometry(params, state, state.tilt.axis_yaw).topple_angle()
}

/// Result of one tilt integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltUpdate {
    pub tilt: Tilt,
    pub toppled: bool,
    /// Tilt rate applied over the step, rad/s.
    pub rate: f64,
}

/// Advances the inclination by one step.
pub fn tilt_update(
    contact: &ContactInfo,
    params: &ObjectParams,
    state: &ObjectState,
    cfg: &WorldConfig,
) -> TiltUpdate {
    let mut tilt = state.tilt;
    if state.toppled {
        return TiltUpdate {
            tilt,
            toppled: true,
            rate: 0.0,
        };
    }
    let g = cfg.gravity;
    let push = contact_force(contact, params, state, cfg).normal;
    let push_mag = push.norm();

    let mut rate = 0.0;
    let mut pushing = false;
    if contact.in_contact && push_mag > 0.0 {
        if tilt.angle == 0.0 {
            tilt.axis_yaw = tipping_heading(params, state, push / push_mag);
        }
        let geo = tip_geometry(params, state, tilt.axis_yaw);
        let along = push.dot(&tilt.direction()).max(0.0);
        // Ground friction bounds the horizontal force the object can carry.
        let transmitted = along.min(params.mu_ground * params.mass * g);
        let excess =
            transmitted * contact.contact_height - geo.restoring_moment(params, g, tilt.angle);
        if excess > 0.0 {
            pushing = true;
            rate = cfg.tilt_rate_gain * excess / (params.mass * g * geo.lever);
        }
    }
    let geo = tip_geometry(params, state, tilt.axis_yaw);
    let topple = geo.topple_angle();
    if !pushing && tilt.angle > 0.0 {
        rate = if tilt.angle < topple {
            -cfg.tilt_restore_rate
        } else {
            cfg.tilt_restore_rate
        };
    }
    tilt.angle = (tilt.angle + rate * cfg.dt).max(0.0);
    TiltUpdate {
        tilt,
        toppled: tilt.angle >= topple,
        rate,
    }
}
