//! Work accounting under two environments: one where every run starts from scratch
//! ("no-resume") and one where a run on a (configuration, instance) pair can continue from
//! where the previous, shorter run on that pair stopped ("resume").

use serde::{Deserialize, Serialize};

use crate::oracle::Measurement;

pub trait ChargeSink {
    fn charge(&mut self, m: &Measurement);
}

/// Running totals. `resume` never includes reload overhead; that is kept apart in `overhead`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub no_resume: f64,
    pub resume: f64,
    pub overhead: f64,
    pub runs: u64,
    pub resumed_runs: u64,
}

impl LedgerTotals {
    fn add(&mut self, other: &LedgerTotals) {
        self.no_resume += other.no_resume;
        self.resume += other.resume;
        self.overhead += other.overhead;
        self.runs += other.runs;
        self.resumed_runs += other.resumed_runs;
    }

    pub fn resume_with_overhead(&self) -> f64 {
        self.resume + self.overhead
    }
}

fn charge_pair(high_water: &mut f64, totals: &mut LedgerTotals, overhead: f64, elapsed: f64) {
    totals.no_resume += elapsed;
    totals.runs += 1;
    if elapsed > *high_water {
        if *high_water > 0.0 {
            totals.resumed_runs += 1;
            totals.overhead += overhead;
        }
        totals.resume += elapsed - *high_water;
        *high_water = elapsed;
    }
}

/// Dense ledger over all (configuration, instance) pairs of an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct CostLedger {
    n_instances: usize,
    high_water: Vec<f64>,
    totals: LedgerTotals,
    resume_overhead: f64,
}

impl CostLedger {
    pub fn new(n_configs: usize, n_instances: usize) -> Self {
        CostLedger {
            n_instances,
            high_water: vec![0.0; n_configs * n_instances],
            totals: LedgerTotals::default(),
            resume_overhead: 0.0,
        }
    }

    /// Constant charged (separately from `total_resume`) each time a pair is resumed.
    pub fn with_resume_overhead(mut self, overhead: f64) -> Self {
        self.resume_overhead = overhead;
        self
    }

    pub fn total_no_resume(&self) -> f64 {
        self.totals.no_resume
    }

    pub fn total_resume(&self) -> f64 {
        self.totals.resume
    }

    pub fn run_count(&self) -> u64 {
        self.totals.runs
    }

    pub fn totals(&self) -> LedgerTotals {
        self.totals
    }

    pub fn high_water(&self, config: usize, instance: usize) -> f64 {
        self.high_water[config * self.n_instances + instance]
    }

    pub fn high_water_sum(&self) -> f64 {
        self.high_water.iter().sum()
    }

    /// Disjoint per-configuration views for charging concurrently. Only configurations in
    /// `configs` are returned, in that order; ids must be distinct.
    pub fn rows_mut(&mut self, configs: &[usize]) -> Vec<LedgerRow<'_>> {
        let overhead = self.resume_overhead;
        let mut rows: Vec<Option<&mut [f64]>> = self.high_water.chunks_mut(self.n_instances.max(1)).map(Some).collect();
        configs
            .iter()
            .map(|&c| LedgerRow {
                high_water: rows[c].take().expect("configuration ids must be distinct"),
                totals: LedgerTotals::default(),
                overhead,
            })
            .collect()
    }

    /// Folds per-row subtotals into the ledger, in the order given.
    pub fn absorb<'t>(&mut self, subtotals: impl IntoIterator<Item = &'t LedgerTotals>) {
        for t in subtotals {
            self.totals.add(t);
        }
    }
}

impl ChargeSink for CostLedger {
    fn charge(&mut self, m: &Measurement) {
        let idx = m.config * self.n_instances + m.instance;
        charge_pair(
            &mut self.high_water[idx],
            &mut self.totals,
            self.resume_overhead,
            m.elapsed,
        );
    }
}

/// Mutable view of one configuration's high-water marks plus local subtotals.
#[derive(Debug)]
pub struct LedgerRow<'a> {
    high_water: &'a mut [f64],
    totals: LedgerTotals,
    overhead: f64,
}

impl LedgerRow<'_> {
    pub fn totals(&self) -> LedgerTotals {
        self.totals
    }
}

impl ChargeSink for LedgerRow<'_> {
    fn charge(&mut self, m: &Measurement) {
        charge_pair(
            &mut self.high_water[m.instance],
            &mut self.totals,
            self.overhead,
            m.elapsed,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(config: usize, instance: usize, elapsed: f64) -> Measurement {
        Measurement::finished(config, instance, elapsed, elapsed)
    }

    #[test]
    fn charge_examples() {
        let mut ledger = CostLedger::new(2, 2);
        ledger.charge(&m(0, 1, 5.0));
        assert_eq!((ledger.total_no_resume(), ledger.total_resume()), (5.0, 5.0));

        let mut ledger = CostLedger::new(2, 2);
        ledger.charge(&m(1, 0, 3.0));
        ledger.charge(&m(1, 0, 5.0));
        assert_eq!((ledger.total_no_resume(), ledger.total_resume()), (8.0, 5.0));

        let mut ledger = CostLedger::new(2, 2);
        ledger.charge(&m(1, 0, 5.0));
        ledger.charge(&m(1, 0, 4.0));
        assert_eq!((ledger.total_no_resume(), ledger.total_resume()), (9.0, 5.0));
        assert_eq!(ledger.high_water(1, 0), 5.0);
        assert_eq!(ledger.run_count(), 2);
    }

    #[test]
    fn overhead_is_separate() {
        let mut ledger = CostLedger::new(1, 1).with_resume_overhead(0.5);
        ledger.charge(&m(0, 0, 2.0));
        ledger.charge(&m(0, 0, 3.0));
        ledger.charge(&m(0, 0, 1.0));
        let t = ledger.totals();
        assert_eq!(t.resume, 3.0);
        assert_eq!(t.overhead, 0.5);
        assert_eq!(t.resumed_runs, 1);
        assert_eq!(t.resume_with_overhead(), 3.5);
    }

    #[test]
    fn rows_match_direct_charging() {
        let runs = [m(0, 0, 2.0), m(2, 1, 4.0), m(0, 0, 3.0), m(2, 1, 1.0), m(0, 1, 0.5)];
        let mut direct = CostLedger::new(3, 2);
        for r in &runs {
            direct.charge(r);
        }
        let mut split = CostLedger::new(3, 2);
        let subtotals: Vec<LedgerTotals> = {
            let mut rows = split.rows_mut(&[2, 0]);
            for r in &runs {
                let row = if r.config == 2 { &mut rows[0] } else { &mut rows[1] };
                row.charge(r);
            }
            rows.iter().map(LedgerRow::totals).collect()
        };
        split.absorb(&subtotals);
        assert_eq!(split.high_water_sum(), direct.high_water_sum());
        assert_eq!(split.total_no_resume(), direct.total_no_resume());
        assert_eq!(split.total_resume(), direct.total_resume());
        assert_eq!(split.run_count(), 5);
    }

    proptest! {
        #[test]
        fn replay_matches_brute_force(
            runs in proptest::collection::vec((0usize..3, 0usize..4, 0.0f64..100.0), 0..200)
        ) {
            let mut ledger = CostLedger::new(3, 4);
            let mut prev = (0.0, 0.0);
            for &(c, j, e) in &runs {
                ledger.charge(&m(c, j, e));
                prop_assert!(ledger.total_no_resume() >= prev.0);
                prop_assert!(ledger.total_resume() >= prev.1);
                prop_assert!(ledger.total_resume() <= ledger.total_no_resume() + 1e-9);
                prev = (ledger.total_no_resume(), ledger.total_resume());
            }
            let plain: f64 = runs.iter().map(|r| r.2).sum();
            let mut best = [[0.0f64; 4]; 3];
            for &(c, j, e) in &runs {
                best[c][j] = best[c][j].max(e);
            }
            let resume: f64 = best.iter().flatten().sum();
            prop_assert!((ledger.total_no_resume() - plain).abs() <= 1e-9 * plain.max(1.0));
            prop_assert!((ledger.total_resume() - resume).abs() <= 1e-9 * resume.max(1.0));
            prop_assert!((ledger.high_water_sum() - ledger.total_resume()).abs() <= 1e-9 * resume.max(1.0));
        }
    }
}
