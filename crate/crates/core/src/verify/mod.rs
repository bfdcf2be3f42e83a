//! Ground truth over a full runtime table: the optimal mean, (epsilon, delta)-optimality of
//! a configuration, capped-mean curves and the frequency of the events the guarantee
//! rests on.
//!
//! Every configuration's row is treated as the whole instance distribution, so capped means
//! and tail probabilities are exact row statistics.

mod events;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{CensoringPolicy, RuntimeTable};

pub use events::{event_harness, EventRadius, EventStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptMean {
    pub value: f64,
    /// A configuration attaining `value` (lowest id on ties).
    pub config: usize,
    /// Some cell is censored, so `value` may understate the true optimum.
    pub censoring_bias: bool,
}

/// Smallest row mean over all configurations. Censored cells count at the cap.
pub fn opt_mean(table: &RuntimeTable) -> OptMean {
    let mut best = OptMean {
        value: f64::INFINITY,
        config: 0,
        censoring_bias: table.has_censored(),
    };
    for (i, row) in table.rows().enumerate() {
        let m = mean(row);
        if m < best.value {
            best.value = m;
            best.config = i;
        }
    }
    best
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Largest number of instances allowed to exceed the threshold: `floor(delta * m)`.
fn tail_allowance(delta: f64, m: usize) -> usize {
    (delta * m as f64).floor() as usize
}

/// A configuration's sorted runtimes with prefix sums, answering capped-mean and tail
/// queries in logarithmic time.
#[derive(Debug, Clone, PartialEq)]
pub struct RowIndex {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
    cap: f64,
}

impl RowIndex {
    pub fn new(row: &[f64], cap: f64) -> Self {
        let mut sorted = row.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        RowIndex { sorted, prefix, cap }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    fn at_most(&self, tau: f64) -> usize {
        self.sorted.partition_point(|&v| v <= tau)
    }

    /// Mean of `min(v, tau)` over the row.
    pub fn capped_mean(&self, tau: f64) -> f64 {
        let below = self.at_most(tau);
        let above = self.len() - below;
        (self.prefix[below] + tau * above as f64) / self.len() as f64
    }

    /// Fraction of the row strictly above `tau`.
    pub fn tail(&self, tau: f64) -> f64 {
        (self.len() - self.at_most(tau)) as f64 / self.len() as f64
    }

    /// Smallest row value whose strict-exceedance fraction is at most `delta`.
    pub fn quantile(&self, delta: f64) -> f64 {
        let m = self.len();
        let allowed = tail_allowance(delta, m).min(m - 1);
        self.sorted[m - 1 - allowed]
    }

    /// Whether `tau` is a censored value of this row.
    pub fn censored_at(&self, tau: f64) -> bool {
        tau >= self.cap
    }
}

/// Mean of `min(v, tau)` by a full pass over the row.
pub fn capped_mean_scan(row: &[f64], tau: f64) -> f64 {
    row.iter().map(|&v| v.min(tau)).sum::<f64>() / row.len() as f64
}

/// Fraction of the row strictly above `tau`, by a full pass.
pub fn tail_scan(row: &[f64], tau: f64) -> f64 {
    row.iter().filter(|&&v| v > tau).count() as f64 / row.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityWitness {
    pub config: usize,
    pub is_optimal: bool,
    /// The threshold proving optimality; absent when the configuration is not optimal.
    pub witness_tau: Option<f64>,
    /// Smallest threshold with tail at most `delta`, the only candidate worth checking.
    pub quantile_tau: f64,
    pub capped_mean_at_tau: f64,
    pub tail_prob_at_tau: f64,
    pub opt: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// The optimum or the threshold involves censored cells (only possible under Clamp).
    pub censoring_bias: bool,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid("delta", format!("{delta} must be in [0, 1)")));
    }
    Ok(())
}

fn row_index(table: &RuntimeTable, config: usize) -> Result<RowIndex> {
    if config >= table.n_configs() {
        return Err(Error::UnknownConfig(config));
    }
    Ok(RowIndex::new(table.row(config), table.cap()))
}

fn quantile_checked(index: &RowIndex, config: usize, delta: f64, policy: CensoringPolicy) -> Result<(f64, bool)> {
    let tau = index.quantile(delta);
    let censored = index.censored_at(tau);
    if censored && policy == CensoringPolicy::Strict {
        return Err(Error::CensoredQuantile {
            config,
            delta,
            cap: index.cap,
        });
    }
    Ok((tau, censored))
}

/// Decides whether `config` is (epsilon, delta)-optimal: some threshold `tau` has capped
/// mean at most `(1 + epsilon) OPT` and tail probability at most `delta`.
pub fn check_eps_delta_optimal(
    table: &RuntimeTable,
    config: usize,
    epsilon: f64,
    delta: f64,
    policy: CensoringPolicy,
) -> Result<OptimalityWitness> {
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon", format!("{epsilon} must be non-negative")));
    }
    check_delta(delta)?;
    let index = row_index(table, config)?;
    let (tau, censored) = quantile_checked(&index, config, delta, policy)?;
    let opt = opt_mean(table);
    let capped = index.capped_mean(tau);
    let is_optimal = capped <= (1.0 + epsilon) * opt.value;
    Ok(OptimalityWitness {
        config,
        is_optimal,
        witness_tau: is_optimal.then_some(tau),
        quantile_tau: tau,
        capped_mean_at_tau: capped,
        tail_prob_at_tau: index.tail(tau),
        opt: opt.value,
        epsilon,
        delta,
        censoring_bias: censored || opt.censoring_bias,
    })
}

/// Mean of the row capped at its `delta` tail threshold; `delta = 0` gives the plain mean.
pub fn capped_mean_below_quantile(
    table: &RuntimeTable,
    config: usize,
    delta: f64,
    policy: CensoringPolicy,
) -> Result<f64> {
    check_delta(delta)?;
    let index = row_index(table, config)?;
    let (tau, _) = quantile_checked(&index, config, delta, policy)?;
    Ok(index.capped_mean(tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub config_rank: usize,
    pub config_id: usize,
    pub value: f64,
}

/// Every configuration's [`capped_mean_below_quantile`], sorted ascending (ties by id).
pub fn capped_mean_curve(table: &RuntimeTable, delta: f64, policy: CensoringPolicy) -> Result<Vec<CurvePoint>> {
    let mut values = (0..table.n_configs())
        .map(|i| Ok((i, capped_mean_below_quantile(table, i, delta, policy)?)))
        .collect::<Result<Vec<_>>>()?;
    values.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(rank, (config_id, value))| CurvePoint {
            config_rank: rank,
            config_id,
            value,
        })
        .collect())
}
