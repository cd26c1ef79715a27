//! Penalty contact between the end-effector point and the object's lateral
//! surface.

use nalgebra::Vector3;

use super::object::{Face, ObjectParams, ObjectState, Shape};

/// Cylinder contacts carry this face index.
pub const NO_FACE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactInfo {
    pub in_contact: bool,
    /// Projection of the EE onto the penetrated surface, world frame.
    pub contact_point: Vector3<f64>,
    /// Unit normal pointing into the object, world frame.
    pub inward_normal: Vector3<f64>,
    pub penetration: f64,
    pub face_index: i32,
    /// EE height above ground at contact.
    pub contact_height: f64,
    /// World EE velocity over the last step, used for contact friction.
    pub ee_velocity: Vector3<f64>,
}

impl ContactInfo {
    pub fn none() -> Self {
        Self {
            in_contact: false,
            contact_point: Vector3::zeros(),
            inward_normal: Vector3::x(),
            penetration: 0.0,
            face_index: NO_FACE,
            contact_height: 0.0,
            ee_velocity: Vector3::zeros(),
        }
    }

    pub fn face(&self) -> Option<Face> {
        if self.in_contact {
            Face::from_index(self.face_index)
        } else {
            None
        }
    }
}

impl Default for ContactInfo {
    fn default() -> Self {
        Self::none()
    }
}

/// Detects EE penetration of the object's lateral surface.
///
/// The EE counts as inside when it lies within the footprint and strictly
/// between the bottom and top faces; penetration is measured to the nearest
/// lateral face (cuboid) or the mantle (cylinder).
pub fn resolve_contact(
    ee_world: &Vector3<f64>,
    ee_velocity: &Vector3<f64>,
    params: &ObjectParams,
    state: &ObjectState,
) -> ContactInfo {
    let p = state.to_body(params, ee_world);
    let mut info = ContactInfo {
        ee_velocity: *ee_velocity,
        ..ContactInfo::none()
    };
    if p.z <= 0.0 || p.z >= params.dims.z {
        return info;
    }
    let rot = state.rotation();
    let (depth, normal_body, surface_body, face) = match params.shape {
        Shape::Cuboid => {
            let h = params.half_extents();
            let candidates = [
                (h.x - p.x, Face::PosX),
                (h.x + p.x, Face::NegX),
                (h.y - p.y, Face::PosY),
                (h.y + p.y, Face::NegY),
            ];
            let (depth, face) =
                candidates
                    .iter()
                    .copied()
                    .fold((f64::INFINITY, Face::PosX), |best, c| {
                        if c.0 < best.0 {
                            c
                        } else {
                            best
                        }
                    });
            let n_out = face.outward_normal();
            (depth, -n_out, p + n_out * depth, face.index())
        }
        Shape::Cylinder => {
            let r = params.radius();
            let rho = p.xy().norm();
            let radial = if rho > 0.0 {
                Vector3::new(p.x / rho, p.y / rho, 0.0)
            } else {
                Vector3::x()
            };
            (r - rho, -radial, p + radial * (r - rho), NO_FACE)
        }
    };
    if depth <= 0.0 {
        return info;
    }
    info.in_contact = true;
    info.penetration = depth;
    info.inward_normal = rot * normal_body;
    info.contact_point = state.to_world(params, &surface_body);
    info.face_index = face;
    info.contact_height = ee_world.z;
    info
}
