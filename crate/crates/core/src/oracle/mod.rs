//! Measurement backends and cost accounting.

mod ledger;
#[cfg(all(unix, feature = "subprocess"))]
pub mod subprocess;
mod synthetic;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use ledger::{ChargeSink, CostLedger, LedgerRow, LedgerTotals};
pub use synthetic::{gen_synthetic, SyntheticModel};
pub use table::TableOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Finished,
    TimedOut,
}

/// One capped run: `elapsed = min(R(config, instance), limit)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub config: usize,
    pub instance: usize,
    pub limit: f64,
    pub elapsed: f64,
    pub outcome: Outcome,
}

impl Measurement {
    pub fn finished(config: usize, instance: usize, limit: f64, elapsed: f64) -> Self {
        Measurement {
            config,
            instance,
            limit,
            elapsed,
            outcome: Outcome::Finished,
        }
    }

    pub fn timed_out(config: usize, instance: usize, limit: f64) -> Self {
        Measurement {
            config,
            instance,
            limit,
            elapsed: limit,
            outcome: Outcome::TimedOut,
        }
    }
}

/// Something that can run configuration `config` on instance `instance` with a timeout.
pub trait Oracle: Send + Sync {
    fn measure(&self, config: usize, instance: usize, limit: f64) -> Result<Measurement>;

    fn n_configs(&self) -> usize;

    fn n_instances(&self) -> usize;
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn measure(&self, config: usize, instance: usize, limit: f64) -> Result<Measurement> {
        (**self).measure(config, instance, limit)
    }

    fn n_configs(&self) -> usize {
        (**self).n_configs()
    }

    fn n_instances(&self) -> usize {
        (**self).n_instances()
    }
}
