//! Search parameters shared by the driver, estimator and CLI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which stopping rules `runtime_est` applies on top of the budget and sample-count rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppingRule {
    /// Only the budget and all-samples rules.
    Fixed,
    /// Empirical Bernstein stopping with a fresh union-bound term at every sample count.
    Bernstein,
    /// Geometric-grid Bernstein stopping (EBGStop).
    Ebg,
}

impl StoppingRule {
    pub const ALL: [StoppingRule; 3] = [StoppingRule::Fixed, StoppingRule::Bernstein, StoppingRule::Ebg];

    pub fn as_str(self) -> &'static str {
        match self {
            StoppingRule::Fixed => "fixed",
            StoppingRule::Bernstein => "bernstein",
            StoppingRule::Ebg => "ebg",
        }
    }
}

impl fmt::Display for StoppingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StoppingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(StoppingRule::Fixed),
            "bernstein" => Ok(StoppingRule::Bernstein),
            "ebg" => Ok(StoppingRule::Ebg),
            other => Err(Error::invalid("stopping", format!("unknown rule {other:?}"))),
        }
    }
}

/// How the EBG rule moves along its geometric grid when the sample count crosses a boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridAdvance {
    /// Advance until `floor(beta^(l-1)) < j <= floor(beta^l)`.
    #[default]
    Loop,
    /// Advance by at most one grid index per sample.
    SingleStep,
}

impl GridAdvance {
    pub fn as_str(self) -> &'static str {
        match self {
            GridAdvance::Loop => "loop",
            GridAdvance::SingleStep => "single-step",
        }
    }
}

impl FromStr for GridAdvance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loop" => Ok(GridAdvance::Loop),
            "single-step" | "single" => Ok(GridAdvance::SingleStep),
            other => Err(Error::invalid("grid-advance", format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Precision, in (0, 1/3).
    pub epsilon: f64,
    /// Tail quantile, in (0, 1).
    pub delta: f64,
    /// Failure probability, in (0, 1).
    pub zeta: f64,
    /// Minimum runtime of any configuration on any instance, seconds.
    pub kappa0: f64,
    /// Growth factor of the runtime guess between phases.
    pub multiplier: f64,
    pub seed: u64,
    pub stopping_rule: StoppingRule,
}

impl SearchParams {
    pub const DEFAULT_MULTIPLIER: f64 = 2.0;

    pub fn new(epsilon: f64, delta: f64, zeta: f64, kappa0: f64) -> Self {
        SearchParams {
            epsilon,
            delta,
            zeta,
            kappa0,
            multiplier: Self::DEFAULT_MULTIPLIER,
            seed: 0,
            stopping_rule: StoppingRule::Ebg,
        }
    }

    pub fn with_multiplier(mut self, multiplier: f64) -> Self {
        self.multiplier = multiplier;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rule(mut self, rule: StoppingRule) -> Self {
        self.stopping_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let open = |x: f64, lo: f64, hi: f64| x.is_finite() && x > lo && x < hi;
        if !open(self.epsilon, 0.0, 1.0 / 3.0) {
            return Err(Error::invalid("epsilon", format!("{} not in (0, 1/3)", self.epsilon)));
        }
        if !open(self.delta, 0.0, 1.0) {
            return Err(Error::invalid("delta", format!("{} not in (0, 1)", self.delta)));
        }
        if !open(self.zeta, 0.0, 1.0) {
            return Err(Error::invalid("zeta", format!("{} not in (0, 1)", self.zeta)));
        }
        if !(self.kappa0.is_finite() && self.kappa0 > 0.0) {
            return Err(Error::invalid("kappa0", format!("{} must be positive", self.kappa0)));
        }
        if !(self.multiplier.is_finite() && self.multiplier > 1.0) {
            return Err(Error::invalid(
                "multiplier",
                format!("{} must exceed 1", self.multiplier),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_paper_settings() {
        let p = SearchParams::new(0.2, 0.2, 0.1, 1.0).with_multiplier(1.25);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range() {
        let base = SearchParams::new(0.2, 0.2, 0.1, 1.0);
        let bad = [
            SearchParams { epsilon: 0.4, ..base },
            SearchParams {
                epsilon: 1.0 / 3.0,
                ..base
            },
            SearchParams { epsilon: 0.0, ..base },
            SearchParams { delta: 1.0, ..base },
            SearchParams { zeta: 0.0, ..base },
            SearchParams { kappa0: 0.0, ..base },
            SearchParams {
                multiplier: 1.0,
                ..base
            },
            SearchParams {
                delta: f64::NAN,
                ..base
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::InvalidParameter { .. })), "{p:?}");
        }
    }

    #[test]
    fn rule_parse_roundtrip() {
        for r in StoppingRule::ALL {
            assert_eq!(r.as_str().parse::<StoppingRule>().unwrap(), r);
        }
        assert!("greedy".parse::<StoppingRule>().is_err());
    }
}
