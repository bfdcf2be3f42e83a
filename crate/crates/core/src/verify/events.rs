//! Empirical frequency of the two events behind the correctness guarantee, over repeated
//! seeded searches on a table:
//!
//! - tail event: a configuration returned an estimate below `theta_k` although more than a
//!   `delta` fraction of its runs exceed `tau_k`;
//! - deviation event: the mean of the `tau_k`-capped runtimes over the phase's `b_k`
//!   instances is further than `C_{i,k}` from the true capped mean, with
//!   `C_{i,k} = sigma * sqrt(2 L / b_k) + 3 tau_k L / b_k` and `L = ln(6 n k (k+1) / zeta)`.

use serde::{Deserialize, Serialize};

use super::RowIndex;
use crate::driver::{leaps_and_bounds, SearchOptions};
use crate::error::Result;
use crate::estimator::RunningStats;
use crate::oracle::TableOracle;
use crate::params::SearchParams;
use crate::problem::{all_configs, InstanceList, ProblemSpec};
use crate::table::{CensoringPolicy, RuntimeTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRadius {
    pub trial: usize,
    pub phase: u32,
    pub config: usize,
    pub radius: f64,
    /// `|mean over the b_k instances - true capped mean|`.
    pub deviation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventStats {
    pub trials: usize,
    /// Trials with at least one tail-event violation.
    pub tail_violations: usize,
    /// Trials with at least one deviation-event violation.
    pub deviation_violations: usize,
    /// Trials with at least one violation of either kind.
    pub any_violations: usize,
    /// (configuration, phase) pairs examined over all trials.
    pub pairs_checked: usize,
    pub radii: Vec<EventRadius>,
}

impl EventStats {
    pub fn violation_frequency(&self) -> f64 {
        self.any_violations as f64 / self.trials as f64
    }
}

/// Log term of the deviation radius for `n` configurations in phase `k`.
pub fn deviation_log_term(n: usize, k: u32, zeta: f64) -> f64 {
    let k = f64::from(k);
    (6.0 * n as f64 * k * (k + 1.0) / zeta).ln()
}

/// Runs `trials` searches with seeds `seed, seed + 1, ...` and checks both events for
/// every configuration in every executed phase.
pub fn event_harness(
    table: &RuntimeTable,
    params: &SearchParams,
    trials: usize,
    seed: u64,
    options: &SearchOptions,
    policy: CensoringPolicy,
) -> Result<EventStats> {
    let oracle = TableOracle::new(table, policy);
    let configs = all_configs(&oracle);
    let problem = ProblemSpec::new(&oracle, &configs, table.kappa0())?;
    let truth: Vec<RowIndex> = table.rows().map(|r| RowIndex::new(r, table.cap())).collect();
    let n = configs.len();

    let mut stats = EventStats {
        trials,
        ..EventStats::default()
    };
    for trial in 0..trials {
        let trial_params = params.with_seed(seed.wrapping_add(trial as u64));
        let result = leaps_and_bounds(&problem, &trial_params, options)?;
        let mut instances = InstanceList::new(table.n_instances(), trial_params.seed)?;
        let (mut tail_hit, mut dev_hit) = (false, false);
        for record in &result.phases {
            let spec = record.spec;
            instances.extend_to(spec.b as usize);
            let prefix = instances.prefix(spec.b as usize);
            let log_term = deviation_log_term(n, spec.k, params.zeta);
            for est in &record.estimates {
                let i = est.config;
                let truth = &truth[i];
                if est.value < spec.theta && truth.tail(spec.tau) > params.delta {
                    tail_hit = true;
                }
                let mut s = RunningStats::new();
                for &j in prefix {
                    s.push(table.get(i, j).min(spec.tau));
                }
                let b = spec.b as f64;
                let radius = (s.variance() * 2.0 * log_term / b).sqrt() + 3.0 * spec.tau * log_term / b;
                let deviation = (s.mean() - truth.capped_mean(spec.tau)).abs();
                if deviation > radius {
                    dev_hit = true;
                }
                stats.radii.push(EventRadius {
                    trial,
                    phase: spec.k,
                    config: i,
                    radius,
                    deviation,
                });
                stats.pairs_checked += 1;
            }
        }
        stats.tail_violations += usize::from(tail_hit);
        stats.deviation_violations += usize::from(dev_hit);
        stats.any_violations += usize::from(tail_hit || dev_hit);
    }
    Ok(stats)
}
