//! Policy action to absolute command mapping.

use super::config::EnvConfig;
use super::obs::ACTION_DIM;
use crate::physics::{ArmConfig, BaseCommand, NUM_JOINTS};

/// Raw policy output: `(Δu_base: 6, Δq_cmd: 5)` in policy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionVec(pub [f64; ACTION_DIM]);

impl ActionVec {
    pub fn zeros() -> Self {
        Self([0.0; ACTION_DIM])
    }
}

/// Commands derived from one action.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Commands {
    /// Scaled base deviation from the default base state.
    pub base_delta: [f64; 6],
    /// Scaled arm deviation from the default configuration, rad.
    pub arm_delta: [f64; NUM_JOINTS],
    /// Absolute base command before clipping (constraint input).
    pub base_cmd: BaseCommand,
    /// Absolute joint command before clipping (constraint input).
    pub q_cmd: [f64; NUM_JOINTS],
    /// Base command clipped to the physical ranges (simulation input).
    pub base_cmd_clipped: BaseCommand,
    pub q_cmd_clipped: [f64; NUM_JOINTS],
}

pub fn default_base_command(cfg: &EnvConfig) -> BaseCommand {
    [0.0, 0.0, 0.0, 0.0, 0.0, cfg.default_base_height]
}

/// Maps an action to absolute commands. Unclipped values feed the
/// constraints; clipped values drive the simulation.
pub fn apply_action(action: &ActionVec, cfg: &EnvConfig, arm: &ArmConfig) -> Commands {
    let a = &action.0;
    let default = default_base_command(cfg);
    let base_delta: [f64; 6] = std::array::from_fn(|i| cfg.action_scale_base[i] * a[i]);
    let arm_delta: [f64; NUM_JOINTS] = std::array::from_fn(|i| cfg.action_scale_arm * a[6 + i]);
    let base_cmd: BaseCommand = std::array::from_fn(|i| default[i] + base_delta[i]);
    let q_cmd: [f64; NUM_JOINTS] = std::array::from_fn(|i| arm.q_default[i] + arm_delta[i]);
    let base_cmd_clipped =
        std::array::from_fn(|i| base_cmd[i].clamp(cfg.base_cmd_lower[i], cfg.base_cmd_upper[i]));
    Commands {
        base_delta,
        arm_delta,
        base_cmd,
        q_cmd,
        base_cmd_clipped,
        q_cmd_clipped: arm.clip(&q_cmd),
    }
}
