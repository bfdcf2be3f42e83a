//! JSON run report. The layout is documented in `docs/report-schema.md`; bump
//! [`SCHEMA_VERSION`] on any incompatible change.

use std::path::PathBuf;

use leaps_core::driver::PhaseRecord;
use leaps_core::oracle::LedgerTotals;
use leaps_core::{CensoringPolicy, Estimate, GridAdvance, SearchParams, SearchResult};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    /// Facts about this invocation that do not affect the result.
    pub run: RunInfo,
    pub source: Source,
    pub params: SearchParams,
    pub options: OptionsEcho,
    pub result: ResultSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "leaps".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub wall_clock_seconds: f64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Source {
    Table {
        table: PathBuf,
    },
    Subprocess {
        exec_cmd: String,
        instances_dir: PathBuf,
        configs_json: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionsEcho {
    pub censoring: CensoringPolicy,
    pub grid_advance: GridAdvance,
    pub resume_overhead: f64,
    pub subsample_gamma: Option<f64>,
    pub max_phases: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub no_resume_seconds: f64,
    pub resume_seconds: f64,
    pub resume_overhead_seconds: f64,
    pub no_resume_cpu_days: f64,
    pub resume_cpu_days: f64,
    pub runs: u64,
    pub resumed_runs: u64,
}

impl From<LedgerTotals> for Cost {
    fn from(t: LedgerTotals) -> Self {
        Cost {
            no_resume_seconds: t.no_resume,
            resume_seconds: t.resume,
            resume_overhead_seconds: t.overhead,
            no_resume_cpu_days: t.no_resume / SECONDS_PER_DAY,
            resume_cpu_days: t.resume / SECONDS_PER_DAY,
            runs: t.runs,
            resumed_runs: t.resumed_runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSection {
    pub chosen_config: usize,
    pub chosen_label: Option<String>,
    pub chosen_estimate: f64,
    pub final_phase: u32,
    pub theta: f64,
    pub tau: f64,
    pub searched_configs: Vec<usize>,
    pub instances_sampled: usize,
    /// Table requests clamped at the cap (always 0 under strict censoring).
    pub clamped_requests: u64,
    pub totals: Cost,
    pub phases: Vec<PhaseReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub k: u32,
    pub theta: f64,
    pub tau: f64,
    pub b: u64,
    pub budget: f64,
    pub best_config: usize,
    pub best_estimate: f64,
    pub cost: Cost,
    pub cumulative: Cost,
    pub estimates: Vec<Estimate>,
}

impl From<&PhaseRecord> for PhaseReport {
    fn from(p: &PhaseRecord) -> Self {
        let (best, value) = p.best();
        PhaseReport {
            k: p.spec.k,
            theta: p.spec.theta,
            tau: p.spec.tau,
            b: p.spec.b,
            budget: p.spec.budget,
            best_config: p.estimates[best].config,
            best_estimate: value,
            cost: p.cost.into(),
            cumulative: p.cumulative.into(),
            estimates: p.estimates.clone(),
        }
    }
}

impl ResultSection {
    pub fn new(result: &SearchResult, labels: Option<&[String]>, clamped_requests: u64) -> Self {
        ResultSection {
            chosen_config: result.chosen_config,
            chosen_label: labels.and_then(|l| l.get(result.chosen_config).cloned()),
            chosen_estimate: result.chosen_estimate,
            final_phase: result.final_phase,
            theta: result.theta,
            tau: result.tau,
            searched_configs: result.configs.clone(),
            instances_sampled: result.instances_sampled,
            clamped_requests,
            totals: result.totals.into(),
            phases: result.phases.iter().map(PhaseReport::from).collect(),
        }
    }
}

/// One row of the `--trace` CSV.
#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub phase: u32,
    pub theta: f64,
    pub tau: f64,
    pub b: u64,
    pub config_id: usize,
    pub value: f64,
    pub reason: &'static str,
    pub samples_used: u64,
    pub work_charged: f64,
    pub sample_mean: f64,
}

/// One row of the sweep CSV.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub multiplier: f64,
    pub total_resume: f64,
    pub total_no_resume: f64,
    pub chosen_config: usize,
    pub phases: u32,
}
