//! Rigid object geometry: parameters, planar pose with tilt, keypoints,
//! surface sampling and analytic inertia.
//!
//! The object body frame has its origin at the centre of the base footprint,
//! `z` pointing up. The geometric centroid therefore sits at `(0, 0, dz/2)` in
//! body coordinates. Tilting rotates the body about a horizontal support edge.

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};
use rand::Rng;
use std::f64::consts::PI;

/// Object shape family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Cuboid,
    Cylinder,
}

impl Shape {
    /// One-hot encoding `(cuboid, cylinder)`.
    pub fn one_hot(self) -> [f64; 2] {
        match self {
            Shape::Cuboid => [1.0, 0.0],
            Shape::Cylinder => [0.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Cuboid => "cuboid",
            Shape::Cylinder => "cylinder",
        }
    }
}

/// Physical description of a pushable object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectParams {
    pub shape: Shape,
    /// Cuboid: `(dx, dy, dz)`. Cylinder: `(diameter, diameter, height)`.
    pub dims: Vector3<f64>,
    pub mass: f64,
    /// CoM offset from the geometric centroid, body frame.
    pub com_offset: Vector3<f64>,
    pub mu_ground: f64,
    pub mu_contact: f64,
}

impl ObjectParams {
    pub fn cuboid(dims: [f64; 3], mass: f64) -> Self {
        Self {
            shape: Shape::Cuboid,
            dims: Vector3::from(dims),
            mass,
            com_offset: Vector3::zeros(),
            mu_ground: 0.8,
            mu_contact: 0.5,
        }
    }

    pub fn cylinder(diameter: f64, height: f64, mass: f64) -> Self {
        Self {
            shape: Shape::Cylinder,
            dims: Vector3::new(diameter, diameter, height),
            mass,
            com_offset: Vector3::zeros(),
            mu_ground: 0.8,
            mu_contact: 0.5,
        }
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        self.dims * 0.5
    }

    pub fn radius(&self) -> f64 {
        self.dims.x * 0.5
    }

    /// CoM in body coordinates.
    pub fn com_body(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, 0.5 * self.dims.z) + self.com_offset
    }

    /// CoM height above ground when upright.
    pub fn com_height(&self) -> f64 {
        0.5 * self.dims.z + self.com_offset.z
    }

    /// Torsional radius of the ellipsoidal limit surface (uniform pressure).
    pub fn torsion_radius(&self) -> f64 {
        match self.shape {
            Shape::Cuboid => 0.4 * 0.5 * (self.dims.x + self.dims.y),
            Shape::Cylinder => 2.0 / 3.0 * self.radius(),
        }
    }

    /// Principal moments of inertia about the CoM, uniform density,
    /// ordered along the body `(x, y, z)` axes.
    pub fn principal_inertia(&self) -> Vector3<f64> {
        let m = self.mass;
        let d = self.dims;
        match self.shape {
            Shape::Cuboid => Vector3::new(
                m * (d.y * d.y + d.z * d.z) / 12.0,
                m * (d.x * d.x + d.z * d.z) / 12.0,
                m * (d.x * d.x + d.y * d.y) / 12.0,
            ),
            Shape::Cylinder => {
                let r = self.radius();
                let transverse = m * (3.0 * r * r + d.z * d.z) / 12.0;
                Vector3::new(transverse, transverse, 0.5 * m * r * r)
            }
        }
    }

    /// Horizontal distance from the body origin to the support edge in the
    /// body-frame direction `dir` (unit, horizontal). For cuboids `dir` must be
    /// one of the four body axes.
    pub fn support_extent(&self, dir_body: Vector2<f64>) -> f64 {
        match self.shape {
            Shape::Cuboid => {
                let h = self.half_extents();
                dir_body.x.abs() * h.x + dir_body.y.abs() * h.y
            }
            Shape::Cylinder => self.radius(),
        }
    }
}

/// Planar pose `(x, y, yaw)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl PlanarPose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

/// Rotation about a horizontal support edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tilt {
    /// Inclination angle, rad, always `>= 0`.
    pub angle: f64,
    /// World heading of the tipping direction (outward normal of the active
    /// support edge). The rotation axis is horizontal and perpendicular to it.
    pub axis_yaw: f64,
}

impl Tilt {
    pub fn direction(&self) -> Vector2<f64> {
        Vector2::new(self.axis_yaw.cos(), self.axis_yaw.sin())
    }
}

/// Kinematic state of the object.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectState {
    /// Pose of the base-footprint centre, as it would be if upright.
    pub pose: PlanarPose,
    pub tilt: Tilt,
    pub lin_vel: Vector2<f64>,
    pub yaw_rate: f64,
    pub toppled: bool,
}

impl ObjectState {
    pub fn at(pose: PlanarPose) -> Self {
        Self {
            pose,
            ..Default::default()
        }
    }

    fn tilt_rotation(&self) -> Rotation3<f64> {
        if self.tilt.angle == 0.0 {
            return Rotation3::identity();
        }
        let u = self.tilt.direction();
        // ẑ × û: rotating by +angle moves the top toward û.
        let axis = Unit::new_normalize(Vector3::new(-u.y, u.x, 0.0));
        Rotation3::from_axis_angle(&axis, self.tilt.angle)
    }

    /// Pivot on the ground about which the tilt rotation acts.
    fn pivot(&self, params: &ObjectParams) -> Vector3<f64> {
        if self.tilt.angle == 0.0 {
            return Vector3::new(self.pose.x, self.pose.y, 0.0);
        }
        let u = self.tilt.direction();
        let rel = self.tilt.axis_yaw - self.pose.yaw;
        let extent = params.support_extent(Vector2::new(rel.cos(), rel.sin()));
        Vector3::new(self.pose.x + extent * u.x, self.pose.y + extent * u.y, 0.0)
    }

    /// Full body-to-world rotation (tilt applied after yaw).
    pub fn rotation(&self) -> Matrix3<f64> {
        (self.tilt_rotation() * Rotation3::from_axis_angle(&Vector3::z_axis(), self.pose.yaw))
            .into_inner()
    }

    /// Maps a body-frame point to world coordinates.
    pub fn to_world(&self, params: &ObjectParams, p_body: &Vector3<f64>) -> Vector3<f64> {
        let yaw = Rotation3::from_axis_angle(&Vector3::z_axis(), self.pose.yaw);
        let base = Vector3::new(self.pose.x, self.pose.y, 0.0);
        let upright = base + yaw * p_body;
        if self.tilt.angle == 0.0 {
            return upright;
        }
        let pivot = self.pivot(params);
        pivot + self.tilt_rotation() * (upright - pivot)
    }

    /// Maps a world point into body coordinates.
    pub fn to_body(&self, params: &ObjectParams, p_world: &Vector3<f64>) -> Vector3<f64> {
        let yaw = Rotation3::from_axis_angle(&Vector3::z_axis(), self.pose.yaw);
        let base = Vector3::new(self.pose.x, self.pose.y, 0.0);
        let upright = if self.tilt.angle == 0.0 {
            *p_world
        } else {
            let pivot = self.pivot(params);
            pivot + self.tilt_rotation().inverse() * (p_world - pivot)
        };
        yaw.inverse() * (upright - base)
    }

    /// World position of the geometric centroid (the object frame origin
    /// used in observations).
    pub fn centroid_world(&self, params: &ObjectParams) -> Vector3<f64> {
        self.to_world(params, &Vector3::new(0.0, 0.0, 0.5 * params.dims.z))
    }

    pub fn com_world(&self, params: &ObjectParams) -> Vector3<f64> {
        self.to_world(params, &params.com_body())
    }
}

/// The eight oriented-bounding-box vertices in world coordinates.
///
/// Vertex order is lexicographic in `(z, y, x)` over the sign pattern
/// `(-, +)`, i.e. `x` varies fastest:
/// `(-x,-y,-z), (+x,-y,-z), (-x,+y,-z), (+x,+y,-z), (-x,-y,+z), ...`.
/// Body-frame `z` spans `[0, dz]`, so an upright box has its centroid at
/// height `dz/2`.
pub fn obb_keypoints(params: &ObjectParams, state: &ObjectState) -> [Vector3<f64>; 8] {
    let h = params.half_extents();
    let mut out = [Vector3::zeros(); 8];
    for (i, v) in out.iter_mut().enumerate() {
        let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
        let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
        let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
        let body = Vector3::new(sx * h.x, sy * h.y, h.z + sz * h.z);
        *v = state.to_world(params, &body);
    }
    out
}

/// Flattened 24-vector form of [`obb_keypoints`].
pub fn keypoint_vector(params: &ObjectParams, state: &ObjectState) -> [f64; 24] {
    let kp = obb_keypoints(params, state);
    let mut out = [0.0; 24];
    for (i, v) in kp.iter().enumerate() {
        out[3 * i..3 * i + 3].copy_from_slice(v.as_slice());
    }
    out
}

/// Lateral face of a cuboid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    PosX = 0,
    NegX = 1,
    PosY = 2,
    NegY = 3,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::PosX, Face::NegX, Face::PosY, Face::NegY];

    pub fn index(self) -> i32 {
        self as i32
    }

    pub fn from_index(i: i32) -> Option<Face> {
        Face::ALL.get(usize::try_from(i).ok()?).copied()
    }

    /// Outward normal in body coordinates.
    pub fn outward_normal(self) -> Vector3<f64> {
        match self {
            Face::PosX => Vector3::x(),
            Face::NegX => -Vector3::x(),
            Face::PosY => Vector3::y(),
            Face::NegY => -Vector3::y(),
        }
    }
}

/// Point drawn uniformly (by area) over the lateral surface, body frame.
pub fn surface_sample<R: Rng + ?Sized>(params: &ObjectParams, rng: &mut R) -> Vector3<f64> {
    let d = params.dims;
    let z = rng.random::<f64>() * d.z;
    match params.shape {
        Shape::Cuboid => {
            let (hx, hy) = (0.5 * d.x, 0.5 * d.y);
            // Walk the perimeter: +x face (length dy), +y (dx), -x (dy), -y (dx).
            let mut s = rng.random::<f64>() * 2.0 * (d.x + d.y);
            if s < d.y {
                return Vector3::new(hx, s - hy, z);
            }
            s -= d.y;
            if s < d.x {
                return Vector3::new(hx - s, hy, z);
            }
            s -= d.x;
            if s < d.y {
                return Vector3::new(-hx, hy - s, z);
            }
            s -= d.y;
            Vector3::new(-hx + s.min(d.x), -hy, z)
        }
        Shape::Cylinder => {
            let r = params.radius();
            let phi = rng.random::<f64>() * 2.0 * PI - PI;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        }
    }
}

/// Wraps an angle to `[-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI && a > 0.0 {
        w = PI;
    }
    w
}
