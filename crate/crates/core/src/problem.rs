//! A configuration problem: an oracle, the configurations to compare and the instance
//! distribution (uniform over the oracle's instances).

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::rng::{self, STREAM_INSTANCES, STREAM_SUBSAMPLE};
use crate::schedule::subsample_size;

#[derive(Clone, Copy)]
pub struct ProblemSpec<'a> {
    oracle: &'a dyn Oracle,
    configs: &'a [usize],
    kappa0: f64,
}

impl std::fmt::Debug for ProblemSpec<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("configs", &self.configs)
            .field("n_instances", &self.oracle.n_instances())
            .field("kappa0", &self.kappa0)
            .finish()
    }
}

impl<'a> ProblemSpec<'a> {
    /// `configs` are oracle configuration ids; they must be distinct and in range.
    pub fn new(oracle: &'a dyn Oracle, configs: &'a [usize], kappa0: f64) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::NoConfigs);
        }
        if oracle.n_instances() == 0 {
            return Err(Error::EmptyInstances);
        }
        if !(kappa0 > 0.0 && kappa0.is_finite()) {
            return Err(Error::invalid("kappa0", format!("{kappa0} must be positive")));
        }
        let mut seen = vec![false; oracle.n_configs()];
        for &c in configs {
            match seen.get_mut(c) {
                None => return Err(Error::UnknownConfig(c)),
                Some(true) => return Err(Error::invalid("configs", format!("configuration {c} listed twice"))),
                Some(s) => *s = true,
            }
        }
        Ok(ProblemSpec {
            oracle,
            configs,
            kappa0,
        })
    }

    pub fn oracle(&self) -> &'a dyn Oracle {
        self.oracle
    }

    pub fn configs(&self) -> &'a [usize] {
        self.configs
    }

    pub fn n_instances(&self) -> usize {
        self.oracle.n_instances()
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }
}

/// All configuration ids of an oracle, in order.
pub fn all_configs(oracle: &dyn Oracle) -> Vec<usize> {
    (0..oracle.n_configs()).collect()
}

/// Draws `subsample_size(gamma, zeta)` configurations uniformly with replacement from
/// `0..n_configs`. Repeated draws collapse, so the result is sorted, distinct and possibly
/// shorter than the draw count.
pub fn subsample_configs(n_configs: usize, gamma: f64, zeta: f64, seed: u64) -> Result<Vec<usize>> {
    if n_configs == 0 {
        return Err(Error::NoConfigs);
    }
    let draws = subsample_size(gamma, zeta)?;
    let mut rng = rng::seeded(seed, STREAM_SUBSAMPLE);
    let mut picked: Vec<usize> = (0..draws).map(|_| rng.random_range(0..n_configs)).collect();
    picked.sort_unstable();
    picked.dedup();
    Ok(picked)
}

/// Instances sampled so far, shared by every configuration. Grows by appending only, so the
/// list used in an earlier phase is always a prefix of the current one.
#[derive(Debug, Clone)]
pub struct InstanceList {
    ids: Vec<usize>,
    n_instances: usize,
    rng: rng::Rng,
}

impl InstanceList {
    pub fn new(n_instances: usize, seed: u64) -> Result<Self> {
        if n_instances == 0 {
            return Err(Error::EmptyInstances);
        }
        Ok(InstanceList {
            ids: Vec::new(),
            n_instances,
            rng: rng::seeded(seed, STREAM_INSTANCES),
        })
    }

    /// Appends fresh uniform draws until the list holds `target` entries.
    pub fn extend_to(&mut self, target: usize) {
        let missing = target.saturating_sub(self.ids.len());
        self.ids.reserve(missing);
        for _ in 0..missing {
            self.ids.push(self.rng.random_range(0..self.n_instances));
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.ids
    }

    pub fn prefix(&self, len: usize) -> &[usize] {
        &self.ids[..len]
    }
}
