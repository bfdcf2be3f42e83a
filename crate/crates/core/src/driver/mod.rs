//! The phase loop.
//!
//! Phase `k` fixes a guess `theta_k`, grows the shared instance list to `b_k` entries and
//! estimates every configuration on that prefix. If the smallest estimate is below
//! `theta_k` its configuration is returned; otherwise `theta` is multiplied and the next
//! phase starts. Estimation for different configurations runs on a worker pool; sampling
//! happens before the fan-out and ledger subtotals are folded in configuration order, so
//! results do not depend on the number of workers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{runtime_est, Estimate, EstimatorContext};
use crate::oracle::{CostLedger, LedgerRow, LedgerTotals};
use crate::params::{GridAdvance, SearchParams};
use crate::problem::{InstanceList, ProblemSpec};
use crate::schedule::{phase_schedule, PhaseSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Worker threads for per-configuration estimation; `None` uses all cores.
    pub threads: Option<usize>,
    /// Abort with [`Error::MaxPhases`] instead of starting phase `max_phases + 1`.
    pub max_phases: Option<u32>,
    pub grid_advance: GridAdvance,
    /// Keep individual measurements in the phase records.
    pub record_samples: bool,
    /// Charged once per resumed (configuration, instance) pair, reported apart from the
    /// resume total.
    pub resume_overhead: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            threads: None,
            max_phases: None,
            grid_advance: GridAdvance::Loop,
            record_samples: false,
            resume_overhead: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub spec: PhaseSpec,
    /// One estimate per searched configuration, in search order.
    pub estimates: Vec<Estimate>,
    /// Work charged during this phase.
    pub cost: LedgerTotals,
    /// Cumulative ledger totals at the end of this phase.
    pub cumulative: LedgerTotals,
}

impl PhaseRecord {
    /// Index (into the search order) and value of the smallest estimate; lowest index on ties.
    pub fn best(&self) -> (usize, f64) {
        let mut best = (0, self.estimates[0].value);
        for (i, e) in self.estimates.iter().enumerate().skip(1) {
            if e.value < best.1 {
                best = (i, e.value);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Oracle id of the returned configuration.
    pub chosen_config: usize,
    /// Its estimated capped mean in the final phase.
    pub chosen_estimate: f64,
    pub final_phase: u32,
    pub theta: f64,
    pub tau: f64,
    pub configs: Vec<usize>,
    pub phases: Vec<PhaseRecord>,
    pub totals: LedgerTotals,
    pub instances_sampled: usize,
    pub params: SearchParams,
}

impl SearchResult {
    pub fn final_record(&self) -> &PhaseRecord {
        self.phases.last().expect("a search result has at least one phase")
    }
}

/// Runs the search to completion.
pub fn leaps_and_bounds(
    problem: &ProblemSpec<'_>,
    params: &SearchParams,
    options: &SearchOptions,
) -> Result<SearchResult> {
    params.validate()?;
    if !(options.resume_overhead >= 0.0 && options.resume_overhead.is_finite()) {
        return Err(Error::invalid("resume_overhead", "must be non-negative"));
    }
    if params.kappa0 > problem.kappa0() {
        log::warn!(
            "kappa0 {} exceeds the problem's lower runtime bound {}",
            params.kappa0,
            problem.kappa0()
        );
    }
    let oracle = problem.oracle();
    let configs = problem.configs();
    let n = configs.len();
    let pool = Pool::new(options.threads)?;
    let mut ledger =
        CostLedger::new(oracle.n_configs(), oracle.n_instances()).with_resume_overhead(options.resume_overhead);
    let mut instances = InstanceList::new(problem.n_instances(), params.seed)?;
    let mut phases = Vec::new();

    for k in 1.. {
        if options.max_phases.is_some_and(|m| k > m) {
            return Err(Error::MaxPhases(k - 1));
        }
        let spec = phase_schedule(params, n, k)?;
        let b = usize::try_from(spec.b)
            .map_err(|_| Error::invalid("b", format!("{} instances do not fit in memory", spec.b)))?;
        instances.extend_to(b);
        let ctx = EstimatorContext::new(params, spec, n, instances.prefix(b))
            .recording(options.record_samples)
            .with_grid_advance(options.grid_advance);

        let rows = ledger.rows_mut(configs);
        let results = pool.run(configs, rows, |config, row| {
            let est = runtime_est(&ctx, config, oracle, row, params.stopping_rule)?;
            Ok((est, row.totals()))
        });
        let mut estimates = Vec::with_capacity(n);
        let mut subtotals = Vec::with_capacity(n);
        for r in results {
            let (est, totals) = r?;
            estimates.push(est);
            subtotals.push(totals);
        }
        ledger.absorb(&subtotals);
        let mut cost = LedgerTotals::default();
        for t in &subtotals {
            cost.no_resume += t.no_resume;
            cost.resume += t.resume;
            cost.overhead += t.overhead;
            cost.runs += t.runs;
            cost.resumed_runs += t.resumed_runs;
        }
        let record = PhaseRecord {
            spec,
            estimates,
            cost,
            cumulative: ledger.totals(),
        };
        let (best, value) = record.best();
        log::debug!(
            "phase {k}: theta {:.4} tau {:.4} b {} best {} ({value:.4}) work {:.1}",
            spec.theta,
            spec.tau,
            spec.b,
            configs[best],
            ledger.total_no_resume()
        );
        phases.push(record);
        if value < spec.theta {
            return Ok(SearchResult {
                chosen_config: configs[best],
                chosen_estimate: value,
                final_phase: k,
                theta: spec.theta,
                tau: spec.tau,
                configs: configs.to_vec(),
                phases,
                totals: ledger.totals(),
                instances_sampled: instances.len(),
                params: *params,
            });
        }
    }
    unreachable!("the phase counter is unbounded")
}

type PhaseOutput = Result<(Estimate, LedgerTotals)>;

struct Pool {
    #[cfg(feature = "parallel")]
    inner: Option<rayon::ThreadPool>,
}

impl Pool {
    #[cfg(feature = "parallel")]
    fn new(threads: Option<usize>) -> Result<Self> {
        let inner = match threads {
            Some(0) => return Err(Error::invalid("threads", "must be at least 1")),
            Some(1) => None,
            t => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t.unwrap_or(0))
                    .build()
                    .map_err(|e| Error::invalid("threads", e.to_string()))?,
            ),
        };
        Ok(Pool { inner })
    }

    #[cfg(not(feature = "parallel"))]
    fn new(threads: Option<usize>) -> Result<Self> {
        if threads == Some(0) {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        Ok(Pool {})
    }

    fn run<F>(&self, configs: &[usize], mut rows: Vec<LedgerRow<'_>>, f: F) -> Vec<PhaseOutput>
    where
        F: Fn(usize, &mut LedgerRow<'_>) -> PhaseOutput + Sync,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            use rayon::prelude::*;
            return pool.install(|| {
                configs
                    .par_iter()
                    .zip(rows.par_iter_mut())
                    .map(|(&c, row)| f(c, row))
                    .collect()
            });
        }
        configs.iter().zip(rows.iter_mut()).map(|(&c, row)| f(c, row)).collect()
    }
}
