//! Phase schedule arithmetic: runtime guess, per-run timeout and instance count per phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SearchParams;

/// Parameters of one phase of the outer search loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    /// Phase index, starting at 1.
    pub k: u32,
    /// Guess on the optimal mean runtime.
    pub theta: f64,
    /// Per-run timeout, `4 theta / (3 delta)`.
    pub tau: f64,
    /// Number of instances every configuration may be run on.
    pub b: u64,
    /// Total runtime allowance of one estimator call, `b * theta`.
    pub budget: f64,
}

/// `ceil(44 ln(6 n k (k+1) / zeta) / (delta epsilon^2))`.
pub fn instance_bound(n: usize, k: u32, epsilon: f64, delta: f64, zeta: f64) -> u64 {
    let nk = n as f64 * f64::from(k) * (f64::from(k) + 1.0);
    let b = 44.0 * (6.0 * nk / zeta).ln() / (delta * epsilon * epsilon);
    (b.ceil() as u64).max(1)
}

/// Runtime guess of phase `k`: `(16/7) kappa0 multiplier^(k-1)`.
pub fn phase_theta(kappa0: f64, multiplier: f64, k: u32) -> f64 {
    16.0 / 7.0 * kappa0 * multiplier.powi(k as i32 - 1)
}

/// Per-run timeout for a phase with guess `theta`.
pub fn phase_tau(theta: f64, delta: f64) -> f64 {
    4.0 * theta / (3.0 * delta)
}

pub fn phase_schedule(params: &SearchParams, n: usize, k: u32) -> Result<PhaseSpec> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "configuration count must be at least 1"));
    }
    if k == 0 {
        return Err(Error::invalid("k", "phase index starts at 1"));
    }
    let theta = phase_theta(params.kappa0, params.multiplier, k);
    let b = instance_bound(n, k, params.epsilon, params.delta, params.zeta);
    Ok(PhaseSpec {
        k,
        theta,
        tau: phase_tau(theta, params.delta),
        b,
        budget: b as f64 * theta,
    })
}

/// Number of configurations to draw (with replacement) so that at least one of the
/// fastest `gamma` fraction is drawn with probability `1 - zeta`.
///
/// Uses `(1 - gamma)^n <= exp(-n gamma)`, i.e. `n = ceil(ln(1/zeta) / gamma)`.
pub fn subsample_size(gamma: f64, zeta: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma", format!("{gamma} not in (0, 1]")));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::invalid("zeta", format!("{zeta} not in (0, 1)")));
    }
    Ok(((1.0 / zeta).ln() / gamma).ceil().max(1.0) as usize)
}
