//! Approximately optimal solver configuration from capped runtime measurements.
//!
//! The search runs in phases with a growing guess `theta` on the optimal mean runtime.
//! In each phase every configuration is run on a shared, growing list of random instances
//! with per-run timeout `tau = 4 theta / (3 delta)` and an overall budget of `b theta`;
//! the search stops as soon as some configuration's estimated capped mean drops below
//! `theta`, returning the configuration with the smallest estimate.
//!
//! Modules:
//! - [`params`], [`schedule`], [`table`], [`problem`]: problem model and phase arithmetic
//! - [`oracle`]: measurement backends and the resume / no-resume cost ledger
//! - [`estimator`]: per-configuration capped mean estimation with adaptive stopping
//! - [`driver`]: the phase loop
//! - [`verify`]: ground-truth checks over full tables

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod error;
pub mod estimator;
pub mod oracle;
pub mod params;
pub mod problem;
pub mod rng;
pub mod schedule;
pub mod table;
pub mod verify;

pub use driver::{leaps_and_bounds, SearchOptions, SearchResult};
pub use error::{Error, Result};
pub use estimator::{bernstein_radius, runtime_est, Estimate, EstimatorContext, StopReason};
pub use oracle::{CostLedger, Measurement, Oracle, Outcome, TableOracle};
pub use params::{GridAdvance, SearchParams, StoppingRule};
pub use problem::ProblemSpec;
pub use schedule::{phase_schedule, subsample_size, PhaseSpec};
pub use table::{load_runtime_table, save_runtime_table, CensoringPolicy, RuntimeTable};
