//! Generalised advantage estimation with constraint-damped continuation.
//!
//! For one environment's sequence, step `t` has reward `r_t`, value `V_t`,
//! done flag `d_t`, termination probability `δ_t` and a successor value
//! `V'_t` (the next step's value, the critic's value of the terminal state
//! on timeouts, zero after a topple). Then
//!
//! ```text
//! e_t = r_t + γ (1 − δ_t) V'_t − V_t
//! A_t = e_t + γ λ (1 − d_t)(1 − δ_t) A_{t+1}
//! ```
//!
//! and the return target is `A_t + V_t`.

/// Per-step inputs of one sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaeStep {
    pub reward: f64,
    pub value: f64,
    pub next_value: f64,
    pub done: bool,
    pub delta: f64,
}

/// Advantages and return targets, written into the output slices.
pub fn gae(
    steps: &[GaeStep],
    gamma: f64,
    lambda: f64,
    advantages: &mut [f64],
    returns: &mut [f64],
) {
    assert_eq!(steps.len(), advantages.len());
    assert_eq!(steps.len(), returns.len());
    let mut next_adv = 0.0;
    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        let keep = 1.0 - s.delta;
        let td = s.reward + gamma * keep * s.next_value - s.value;
        let cont = if s.done { 0.0 } else { keep };
        let a = td + gamma * lambda * cont * next_adv;
        advantages[t] = a;
        returns[t] = a + s.value;
        next_adv = a;
    }
}

/// Shifts advantages to zero mean and unit (population) standard deviation.
pub fn normalize(advantages: &mut [f64]) {
    let n = advantages.len() as f64;
    if n == 0.0 {
        return;
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / n;
    let std = var.sqrt().max(1e-8);
    for a in advantages.iter_mut() {
        *a = (*a - mean) / std;
    }
}
