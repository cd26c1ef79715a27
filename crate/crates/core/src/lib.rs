//! Constrained-RL non-prehensile pushing toolkit.
//!
//! * [`physics`]: quasi-static pushing simulator with support-edge toppling.
//! * [`env`]: task environment, observations and domain randomisation.
//! * [`rewards`] and [`constraints`]: reward terms and constraints-as-terminations.
//! * [`rl`]: asymmetric actor-critic PPO trained from scratch.
//! * [`eval`]: batch evaluation and analysis reports.

pub mod config;
pub mod constraints;
pub mod env;
pub mod eval;
pub mod formats;
pub mod physics;
pub mod rewards;
pub mod rl;
pub mod rng;
pub mod task;
