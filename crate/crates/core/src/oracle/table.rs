use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::oracle::{Measurement, Oracle};
use crate::table::{CensoringPolicy, RuntimeTable};

/// Replays a precomputed runtime table. Exact: `elapsed = min(cell, limit)`.
#[derive(Debug)]
pub struct TableOracle<'a> {
    table: &'a RuntimeTable,
    policy: CensoringPolicy,
    clamped: AtomicU64,
}

impl<'a> TableOracle<'a> {
    pub fn new(table: &'a RuntimeTable, policy: CensoringPolicy) -> Self {
        TableOracle {
            table,
            policy,
            clamped: AtomicU64::new(0),
        }
    }

    pub fn table(&self) -> &'a RuntimeTable {
        self.table
    }

    /// Number of censored lookups answered with the cap under [`CensoringPolicy::Clamp`].
    pub fn clamped_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }
}

impl Oracle for TableOracle<'_> {
    fn measure(&self, config: usize, instance: usize, limit: f64) -> Result<Measurement> {
        if config >= self.table.n_configs() {
            return Err(Error::UnknownConfig(config));
        }
        if instance >= self.table.n_instances() {
            return Err(Error::UnknownInstance(instance));
        }
        if !(limit > 0.0) {
            return Err(Error::invalid("limit", format!("{limit} must be positive")));
        }
        let cap = self.table.cap();
        let value = self.table.get(config, instance);
        if value < cap {
            return Ok(if value <= limit {
                Measurement::finished(config, instance, limit, value)
            } else {
                Measurement::timed_out(config, instance, limit)
            });
        }
        // censored: the true runtime is at least `cap`
        if limit <= cap {
            return Ok(Measurement::timed_out(config, instance, limit));
        }
        match self.policy {
            CensoringPolicy::Strict => Err(Error::Censored {
                config,
                instance,
                limit,
                cap,
            }),
            CensoringPolicy::Clamp => {
                if self.clamped.fetch_add(1, Ordering::Relaxed) == 0 {
                    log::warn!(
                        "limit {limit} exceeds table cap {cap} on censored cell ({config}, {instance}); \
                         answering with the cap (further occurrences are counted, not logged)"
                    );
                }
                Ok(Measurement {
                    elapsed: cap,
                    ..Measurement::timed_out(config, instance, limit)
                })
            }
        }
    }

    fn n_configs(&self) -> usize {
        self.table.n_configs()
    }

    fn n_instances(&self) -> usize {
        self.table.n_instances()
    }
}
