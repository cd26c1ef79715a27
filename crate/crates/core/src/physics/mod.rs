//! Deterministic fixed-step world model.
//!
//! All operations are pure functions over value types: the same inputs
//! always produce bit-identical outputs, and independent worlds can be
//! stepped concurrently.

pub mod arm;
pub mod contact;
pub mod object;
pub mod pushing;
pub mod tilt;
pub mod world;

pub use arm::{arm_points, forward_kinematics, ArmConfig, ArmPoints, BasePlacement, NUM_JOINTS};
pub use contact::{resolve_contact, ContactInfo, NO_FACE};
pub use object::{
    keypoint_vector, obb_keypoints, surface_sample, wrap_angle, Face, ObjectParams, ObjectState,
    PlanarPose, Shape, Tilt,
};
pub use pushing::{limit_surface_twist, PlanarTwist};
pub use tilt::{tilt_update, topple_angle, TiltUpdate};
pub use world::{step_world, BaseCommand, PhysicsError, RobotState, StepOutput, WorldConfig};
