//! Quasi-static planar pushing on an ellipsoidal limit surface.
//!
//! The contact wrench about the CoM ground projection is normalised by the
//! maximum friction force `f_max = μ m g` and moment `m_max = r_c f_max`.
//! Inside the unit ellipsoid the object sticks; outside it slides with a twist
//! along the surface normal whose normalised speed `‖(v, ω r_c)‖` equals
//! `k_v (‖n‖ − 1)`.

use nalgebra::{Vector2, Vector3};

use super::contact::ContactInfo;
use super::object::{ObjectParams, ObjectState};
use super::world::WorldConfig;

/// Planar twist of the CoM ground projection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarTwist {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl PlanarTwist {
    pub fn linear(&self) -> Vector2<f64> {
        Vector2::new(self.vx, self.vy)
    }
}

/// Horizontal contact force on the object and the point it acts at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactForce {
    /// Normal (penalty) force along the horizontal inward normal.
    pub normal: Vector2<f64>,
    /// Coulomb friction from the EE sliding along the surface.
    pub tangential: Vector2<f64>,
    pub point: Vector2<f64>,
}

impl ContactForce {
    pub fn total(&self) -> Vector2<f64> {
        self.normal + self.tangential
    }
}

/// Penalty normal force plus regularised Coulomb friction.
pub fn contact_force(
    contact: &ContactInfo,
    params: &ObjectParams,
    state: &ObjectState,
    cfg: &WorldConfig,
) -> ContactForce {
    let point = contact.contact_point.xy();
    let zero = ContactForce {
        normal: Vector2::zeros(),
        tangential: Vector2::zeros(),
        point,
    };
    if !contact.in_contact {
        return zero;
    }
    let n = contact.inward_normal.xy();
    let n_len = n.norm();
    if n_len < 1e-9 {
        return zero;
    }
    let n = n / n_len;
    let magnitude = (cfg.contact_stiffness * contact.penetration).min(cfg.contact_force_cap);
    let t = Vector2::new(-n.y, n.x);
    let com = state.com_world(params).xy();
    let r = point - com;
    let v_point = state.lin_vel + Vector2::new(-state.yaw_rate * r.y, state.yaw_rate * r.x);
    let slip = (contact.ee_velocity.xy() - v_point).dot(&t);
    let friction = params.mu_contact * magnitude * (slip / cfg.contact_slip_velocity).tanh();
    ContactForce {
        normal: n * magnitude,
        tangential: t * friction,
        point,
    }
}

/// Normalised wrench `(f_x / f_max, f_y / f_max, τ_z / m_max)` about the CoM
/// ground projection.
pub fn normalized_wrench(
    force: &ContactForce,
    params: &ObjectParams,
    state: &ObjectState,
    gravity: f64,
) -> Vector3<f64> {
    let f = force.total();
    let com = state.com_world(params).xy();
    let r = force.point - com;
    let torque = r.x * f.y - r.y * f.x;
    let f_max = params.mu_ground * params.mass * gravity;
    let m_max = params.torsion_radius() * f_max;
    Vector3::new(f.x / f_max, f.y / f_max, torque / m_max)
}

/// Object twist produced by the current contact.
pub fn limit_surface_twist(
    contact: &ContactInfo,
    params: &ObjectParams,
    state: &ObjectState,
    cfg: &WorldConfig,
) -> PlanarTwist {
    if !contact.in_contact {
        return PlanarTwist::default();
    }
    let force = contact_force(contact, params, state, cfg);
    twist_from_wrench(
        &normalized_wrench(&force, params, state, cfg.gravity),
        params,
        cfg,
    )
}

pub fn twist_from_wrench(
    n: &Vector3<f64>,
    params: &ObjectParams,
    cfg: &WorldConfig,
) -> PlanarTwist {
    let norm = n.norm();
    if norm <= 1.0 {
        return PlanarTwist::default();
    }
    let s = cfg.limit_surface_gain * (norm - 1.0) / norm;
    PlanarTwist {
        vx: s * n.x,
        vy: s * n.y,
        omega: s * n.z / params.torsion_radius(),
    }
}
