//! Capped mean-runtime estimation for one configuration within one phase.
//!
//! Each call walks the phase's instance list in order, running the configuration with
//! timeout `min(T, tau)` where `T` is what is left of the `b * theta` budget. After every
//! sample the stopping rules are checked in this order:
//!
//! 1. budget exhausted (the last run was cut short by `T`) -> `theta`
//! 2. all `b` samples taken -> sample mean
//! 3. (Bernstein/EBG, `j >= 2`) lower confidence bound too large -> `theta`
//! 4. (Bernstein/EBG, `j >= 2`) enough samples and a small enough radius -> sample mean

mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{ChargeSink, Measurement, Oracle, Outcome};
use crate::params::{GridAdvance, SearchParams, StoppingRule};
use crate::schedule::PhaseSpec;

pub use stats::RunningStats;

/// Base of the geometric grid used by the EBG rule.
pub const EBG_BETA: f64 = 1.1;
/// Union-bound normaliser of the EBG log term, `sum_l l^-1.1`.
pub const EBG_ZETA_NORMALIZER: f64 = 10.5844;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    AllSamples,
    LowerBoundTooLarge,
    BernsteinConverged,
}

/// Empirical Bernstein confidence radius
/// `sqrt(2 var log_term / count) + 3 range log_term / count`.
pub fn bernstein_radius(var_hat: f64, range: f64, count: u64, log_term: f64) -> Result<f64> {
    if !(var_hat >= 0.0) {
        return Err(Error::invalid("var_hat", format!("{var_hat} must be non-negative")));
    }
    if !(range > 0.0) {
        return Err(Error::invalid("range", format!("{range} must be positive")));
    }
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    if !(log_term > 0.0) {
        return Err(Error::invalid("log_term", format!("{log_term} must be positive")));
    }
    Ok(radius(var_hat, range, count as f64, log_term))
}

#[inline]
fn radius(var_hat: f64, range: f64, count: f64, log_term: f64) -> f64 {
    (2.0 * var_hat * log_term / count).sqrt() + 3.0 * range * log_term / count
}

/// `d_{j,k} = 4 n k (k+1) j (j+1) / zeta`.
pub fn union_term(n: usize, k: u32, j: u64, zeta: f64) -> f64 {
    let (k, j) = (f64::from(k), j as f64);
    4.0 * n as f64 * k * (k + 1.0) * j * (j + 1.0) / zeta
}

/// Smallest sample count at which rule 4 may fire: `ceil((32/delta) ln d_{j,k})`.
pub fn min_samples_gate(n: usize, k: u32, j: u64, delta: f64, zeta: f64) -> f64 {
    (32.0 / delta * union_term(n, k, j, zeta).ln()).ceil()
}

/// Geometric-grid state of the EBG rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbgGrid {
    /// Grid index.
    pub l: u32,
    /// `floor(beta^l) / floor(beta^(l-1))`.
    pub alpha: f64,
    /// `4 * 10.5844 * n k (k+1) l^1.1 / zeta`.
    pub d_prime: f64,
    /// `alpha * ln(3 d')`, the log term used in the radius.
    pub x: f64,
}

impl Default for EbgGrid {
    fn default() -> Self {
        EbgGrid {
            l: 0,
            alpha: 1.0,
            d_prime: f64::NAN,
            x: f64::NAN,
        }
    }
}

fn grid_point(l: u32) -> f64 {
    EBG_BETA.powi(l as i32).floor()
}

impl EbgGrid {
    pub fn new() -> Self {
        Self::default()
    }

    /// Moves the grid forward for sample count `j`. With [`GridAdvance::Loop`] this keeps
    /// `floor(beta^(l-1)) < j <= floor(beta^l)`; [`GridAdvance::SingleStep`] advances at
    /// most once per call.
    pub fn advance(&mut self, j: u64, mode: GridAdvance, n: usize, k: u32, zeta: f64) {
        let j = j as f64;
        while j > grid_point(self.l) {
            self.l += 1;
            let l = f64::from(self.l);
            self.alpha = grid_point(self.l) / grid_point(self.l - 1);
            let kk = f64::from(k) * (f64::from(k) + 1.0);
            self.d_prime = 4.0 * EBG_ZETA_NORMALIZER * n as f64 * kk * l.powf(1.1) / zeta;
            self.x = self.alpha * (3.0 * self.d_prime).ln();
            if mode == GridAdvance::SingleStep {
                break;
            }
        }
    }
}

/// Inputs of one estimator call.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorContext<'a> {
    pub phase: PhaseSpec,
    /// Number of configurations in the search (enters the union bounds).
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub zeta: f64,
    /// Instances `J_1..J_b`, exactly `phase.b` long.
    pub instances: &'a [usize],
    pub grid_advance: GridAdvance,
    /// Keep every measurement in the returned [`Estimate`].
    pub record_samples: bool,
}

impl<'a> EstimatorContext<'a> {
    pub fn new(params: &SearchParams, phase: PhaseSpec, n: usize, instances: &'a [usize]) -> Self {
        EstimatorContext {
            phase,
            n,
            epsilon: params.epsilon,
            delta: params.delta,
            zeta: params.zeta,
            instances,
            grid_advance: GridAdvance::Loop,
            record_samples: false,
        }
    }

    pub fn recording(mut self, yes: bool) -> Self {
        self.record_samples = yes;
        self
    }

    pub fn with_grid_advance(mut self, mode: GridAdvance) -> Self {
        self.grid_advance = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::EmptyInstances);
        }
        if self.instances.len() as u64 != self.phase.b {
            return Err(Error::invalid(
                "instances",
                format!("expected {} instances, got {}", self.phase.b, self.instances.len()),
            ));
        }
        if !(self.phase.theta > 0.0 && self.phase.tau > 0.0) {
            return Err(Error::invalid("theta", "theta and tau must be positive"));
        }
        if self.n == 0 {
            return Err(Error::NoConfigs);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub config: usize,
    /// The sample mean, or `theta` meaning "mean is at least theta". Never above `theta`.
    pub value: f64,
    pub reason: StopReason,
    pub samples_used: u64,
    pub work_charged: f64,
    /// Mean of the observed (capped) runtimes at stopping time.
    pub sample_mean: f64,
    /// Last computed confidence radius, when a Bernstein-type rule was evaluated.
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub samples: Vec<Measurement>,
}

/// Largest timeout that keeps `spent + limit <= budget`. The sum lands exactly on `budget`
/// unless rounding ties make that impossible, in which case it falls one ulp short.
pub(crate) fn remaining_budget(spent: f64, budget: f64) -> f64 {
    let mut x = budget - spent;
    for _ in 0..16 {
        let total = spent + x;
        if total == budget {
            return x;
        }
        x = if total > budget { x.next_down() } else { x.next_up() };
    }
    while spent + x > budget {
        x = x.next_down();
    }
    x
}

/// Estimates the `tau`-capped mean runtime of `config`, charging every run to `sink`.
pub fn runtime_est(
    ctx: &EstimatorContext<'_>,
    config: usize,
    oracle: &dyn Oracle,
    sink: &mut dyn ChargeSink,
    rule: StoppingRule,
) -> Result<Estimate> {
    ctx.validate()?;
    let PhaseSpec {
        k,
        theta,
        tau,
        b,
        budget,
    } = ctx.phase;
    let eps = ctx.epsilon;

    let mut spent = 0.0;
    let mut stats = RunningStats::new();
    let mut grid = EbgGrid::new();
    let mut samples = Vec::new();
    let mut last_radius = None;

    let finish = |value: f64, reason, j: u64, spent: f64, radius, samples| Estimate {
        config,
        value,
        reason,
        samples_used: j,
        work_charged: spent,
        sample_mean: spent / j as f64,
        radius,
        samples,
    };

    for (idx, &instance) in ctx.instances.iter().enumerate() {
        let j = idx as u64 + 1;
        let remaining = remaining_budget(spent, budget);
        let limit = remaining.min(tau);
        let m = oracle.measure(config, instance, limit).map_err(|e| match e {
            Error::Censored {
                config,
                instance,
                limit,
                cap,
            } => Error::CensoredInPhase {
                phase: k,
                tau,
                config,
                instance,
                limit,
                cap,
            },
            other => other,
        })?;
        sink.charge(&m);
        spent += m.elapsed;
        stats.push(m.elapsed);
        if ctx.record_samples {
            samples.push(m);
        }
        if rule == StoppingRule::Ebg {
            grid.advance(j, ctx.grid_advance, ctx.n, k, ctx.zeta);
        }

        let truncated_by_budget = remaining <= tau && m.outcome == Outcome::TimedOut;
        if spent >= budget || truncated_by_budget {
            // the accumulated sum may sit one rounding step below the budget
            return Ok(finish(
                theta,
                StopReason::BudgetExhausted,
                j,
                budget,
                last_radius,
                samples,
            ));
        }
        if j == b {
            let mean = spent / j as f64;
            return Ok(finish(mean, StopReason::AllSamples, j, spent, last_radius, samples));
        }
        if rule == StoppingRule::Fixed || j < 2 {
            continue;
        }

        let mean = spent / j as f64;
        let log_term = match rule {
            StoppingRule::Ebg => grid.x,
            _ => (3.0 * union_term(ctx.n, k, j, ctx.zeta)).ln(),
        };
        let c = radius(stats.variance(), tau, j as f64, log_term);
        last_radius = Some(c);
        let lower = mean - c;
        if (1.0 + 3.0 * eps / 7.0) * lower >= theta && mean > theta {
            return Ok(finish(
                theta,
                StopReason::LowerBoundTooLarge,
                j,
                spent,
                last_radius,
                samples,
            ));
        }
        if j as f64 >= min_samples_gate(ctx.n, k, j, ctx.delta, ctx.zeta) && c <= eps / 3.0 * (mean + lower) {
            // a converged mean above theta carries the same information as the sentinel
            let value = mean.min(theta);
            return Ok(finish(
                value,
                StopReason::BernsteinConverged,
                j,
                spent,
                last_radius,
                samples,
            ));
        }
    }
    unreachable!("the all-samples rule fires at j = b")
}
