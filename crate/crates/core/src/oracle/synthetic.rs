use rand::Rng as _;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::table::RuntimeTable;

/// Per-configuration runtime distribution for generated tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticModel {
    Constant {
        mean: f64,
    },
    /// `exp(N(mu, sigma^2))`.
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Runtime `b` with probability `1/b`, otherwise `kappa0`.
    HeavyTail {
        b: f64,
    },
}

impl SyntheticModel {
    fn validate(&self, kappa0: f64) -> Result<()> {
        match *self {
            SyntheticModel::Constant { mean } if !(mean.is_finite() && mean > 0.0) => {
                Err(Error::invalid("mean", format!("{mean} must be positive")))
            }
            SyntheticModel::LogNormal { mu, sigma } if !(mu.is_finite() && sigma.is_finite() && sigma >= 0.0) => {
                Err(Error::invalid("sigma", format!("bad log-normal ({mu}, {sigma})")))
            }
            SyntheticModel::HeavyTail { b } if !(b.is_finite() && b > kappa0 && b >= 1.0) => {
                Err(Error::invalid("b", format!("{b} must exceed kappa0 ({kappa0}) and 1")))
            }
            _ => Ok(()),
        }
    }
}

/// Generates an `models.len() x n_instances` table, one model per configuration.
/// Values are clipped to `[kappa0, cap]`; anything at or above the cap is censored.
pub fn gen_synthetic(
    models: &[SyntheticModel],
    n_instances: usize,
    cap: f64,
    kappa0: f64,
    seed: u64,
) -> Result<RuntimeTable> {
    if models.is_empty() || n_instances == 0 {
        return Err(Error::invalid("dims", "need at least one configuration and instance"));
    }
    for m in models {
        m.validate(kappa0)?;
    }
    let mut rng = rng::seeded(seed, rng::STREAM_SYNTHETIC);
    let mut rows = Vec::with_capacity(models.len());
    for model in models {
        let row: Vec<f64> = match *model {
            SyntheticModel::Constant { mean } => vec![mean; n_instances],
            SyntheticModel::LogNormal { mu, sigma } => {
                let dist = LogNormal::new(mu, sigma).map_err(|e| Error::invalid("sigma", e.to_string()))?;
                (0..n_instances).map(|_| dist.sample(&mut rng)).collect()
            }
            SyntheticModel::HeavyTail { b } => (0..n_instances)
                .map(|_| if rng.random::<f64>() < 1.0 / b { b } else { kappa0 })
                .collect(),
        };
        rows.push(row.into_iter().map(|v| v.clamp(kappa0, cap)).collect());
    }
    RuntimeTable::from_rows(rows, cap, kappa0)
}
