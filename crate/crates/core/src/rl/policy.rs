//! Diagonal Gaussian policy head with a state-independent log standard
//! deviation.

use rand::Rng;
use rand_distr::StandardNormal;

pub const LOG_STD_MIN: f64 = -4.0;
pub const LOG_STD_MAX: f64 = 1.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub fn clamp_log_std(log_std: f64) -> f64 {
    log_std.clamp(LOG_STD_MIN, LOG_STD_MAX)
}

/// Log-density of `action` under `N(mean, exp(log_std)²)`.
pub fn log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let ls = clamp_log_std(*ls);
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

pub fn entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|ls| 0.5 + HALF_LN_2PI + clamp_log_std(*ls))
        .sum()
}

/// Draws an action and returns it with its log-probability.
pub fn sample<R: Rng + ?Sized>(mean: &[f64], log_std: &[f64], rng: &mut R, out: &mut [f64]) -> f64 {
    for ((o, m), ls) in out.iter_mut().zip(mean).zip(log_std) {
        let eps: f64 = rng.sample(StandardNormal);
        *o = m + clamp_log_std(*ls).exp() * eps;
    }
    log_prob(mean, log_std, out)
}

/// Gradients of `log_prob` with respect to the mean and the (unclamped)
/// log standard deviation. The log-std gradient is zero where the clamp is
/// active.
pub fn log_prob_grad(
    mean: &[f64],
    log_std: &[f64],
    action: &[f64],
    d_mean: &mut [f64],
    d_log_std: &mut [f64],
) {
    for k in 0..mean.len() {
        let ls = log_std[k];
        let cl = clamp_log_std(ls);
        let inv_var = (-2.0 * cl).exp();
        let diff = action[k] - mean[k];
        d_mean[k] = diff * inv_var;
        d_log_std[k] = if ls == cl {
            diff * diff * inv_var - 1.0
        } else {
            0.0
        };
    }
}

/// Gradient of the entropy with respect to each unclamped log-std.
pub fn entropy_grad(log_std: &[f64], out: &mut [f64]) {
    for (o, ls) in out.iter_mut().zip(log_std) {
        *o = if *ls == clamp_log_std(*ls) { 1.0 } else { 0.0 };
    }
}
