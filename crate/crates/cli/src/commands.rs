use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use leaps_core::estimator::StopReason;
use leaps_core::oracle::subprocess::SubprocessOracle;
use leaps_core::oracle::{gen_synthetic, SyntheticModel};
use leaps_core::problem::{all_configs, subsample_configs};
use leaps_core::verify::{capped_mean_curve, check_eps_delta_optimal};
use leaps_core::{
    leaps_and_bounds, load_runtime_table, save_runtime_table, Oracle, ProblemSpec, RuntimeTable, SearchOptions,
    SearchParams, SearchResult, TableOracle,
};

use crate::report::{
    OptionsEcho, ResultSection, RunInfo, RunReport, Source, SweepRow, ToolInfo, TraceRow, SCHEMA_VERSION,
};
use crate::{GenerateArgs, RunArgs, SearchArgs, SourceArgs, SweepArgs, VerifyArgs};

enum Backend {
    Table(RuntimeTable),
    Subprocess(SubprocessOracle),
}

struct Finished {
    result: SearchResult,
    labels: Option<Vec<String>>,
    clamped: u64,
}

impl Backend {
    fn open(src: &SourceArgs) -> Result<Self> {
        if let Some(path) = &src.table {
            let table = load_runtime_table(path, src.censoring)
                .with_context(|| format!("loading runtime table {}", path.display()))?;
            return Ok(Backend::Table(table));
        }
        match (&src.exec_cmd, &src.instances_dir, &src.configs_json) {
            (Some(cmd), Some(dir), Some(configs)) => {
                let oracle = SubprocessOracle::from_paths(cmd, dir, configs)?
                    .with_timing(src.timing)
                    .with_exit_policy(src.on_solver_error);
                Ok(Backend::Subprocess(oracle))
            }
            _ => bail!("give either --table or all of --exec-cmd, --instances-dir and --configs-json"),
        }
    }

    fn source(src: &SourceArgs) -> Source {
        match &src.table {
            Some(table) => Source::Table { table: table.clone() },
            None => Source::Subprocess {
                exec_cmd: src.exec_cmd.clone().unwrap_or_default(),
                instances_dir: src.instances_dir.clone().unwrap_or_default(),
                configs_json: src.configs_json.clone().unwrap_or_default(),
            },
        }
    }

    fn search(&self, args: &SearchArgs, multiplier: f64) -> Result<Finished> {
        match self {
            Backend::Table(table) => {
                let oracle = TableOracle::new(table, args.source.censoring);
                let result = search_with(&oracle, Some(table.kappa0()), args, multiplier)?;
                Ok(Finished {
                    result,
                    labels: Some(table.config_labels().to_vec()),
                    clamped: oracle.clamped_count(),
                })
            }
            Backend::Subprocess(oracle) => Ok(Finished {
                result: search_with(oracle, None, args, multiplier)?,
                labels: None,
                clamped: 0,
            }),
        }
    }
}

fn params_from(args: &SearchArgs, kappa0: f64, multiplier: f64) -> Result<SearchParams> {
    let params = SearchParams::new(args.epsilon, args.delta, args.zeta, kappa0)
        .with_multiplier(multiplier)
        .with_seed(args.seed)
        .with_rule(args.stopping);
    params.validate()?;
    Ok(params)
}

fn search_with(
    oracle: &dyn Oracle,
    problem_kappa0: Option<f64>,
    args: &SearchArgs,
    multiplier: f64,
) -> Result<SearchResult> {
    let kappa0 = args
        .kappa0
        .or(problem_kappa0)
        .ok_or_else(|| anyhow!("--kappa0 is required without a table"))?;
    let params = params_from(args, kappa0, multiplier)?;
    let configs = match args.subsample_gamma {
        Some(gamma) => {
            let picked = subsample_configs(oracle.n_configs(), gamma, args.zeta, args.seed)?;
            log::info!(
                "searching {} subsampled configurations of {}",
                picked.len(),
                oracle.n_configs()
            );
            picked
        }
        None => all_configs(oracle),
    };
    let problem = ProblemSpec::new(oracle, &configs, problem_kappa0.unwrap_or(kappa0))?;
    let options = SearchOptions {
        threads: args.threads,
        max_phases: args.max_phases,
        grid_advance: args.grid_advance,
        record_samples: false,
        resume_overhead: args.resume_overhead,
    };
    Ok(leaps_and_bounds(&problem, &params, &options)?)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn reason_name(r: StopReason) -> &'static str {
    match r {
        StopReason::BudgetExhausted => "budget_exhausted",
        StopReason::AllSamples => "all_samples",
        StopReason::LowerBoundTooLarge => "lower_bound_too_large",
        StopReason::BernsteinConverged => "bernstein_converged",
    }
}

fn write_trace(path: &Path, result: &SearchResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for p in &result.phases {
        for e in &p.estimates {
            w.serialize(TraceRow {
                phase: p.spec.k,
                theta: p.spec.theta,
                tau: p.spec.tau,
                b: p.spec.b,
                config_id: e.config,
                value: e.value,
                reason: reason_name(e.reason),
                samples_used: e.samples_used,
                work_charged: e.work_charged,
                sample_mean: e.sample_mean,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<()> {
    let started = Instant::now();
    let backend = Backend::open(&args.search.source)?;
    let done = backend.search(&args.search, args.multiplier)?;
    let wall = started.elapsed().as_secs_f64();
    let s = &args.search;
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo::current(),
        run: RunInfo {
            timestamp: chrono::Utc::now().to_rfc3339(),
            wall_clock_seconds: wall,
            threads: s.threads,
        },
        source: Backend::source(&s.source),
        params: done.result.params,
        options: OptionsEcho {
            censoring: s.source.censoring,
            grid_advance: s.grid_advance,
            resume_overhead: s.resume_overhead,
            subsample_gamma: s.subsample_gamma,
            max_phases: s.max_phases,
        },
        result: ResultSection::new(&done.result, done.labels.as_deref(), done.clamped),
    };
    if let Some(trace) = &args.trace {
        write_trace(trace, &done.result)?;
    }
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_output(args.out.as_deref(), &json)?;
    log::info!(
        "chose configuration {} in phase {} ({:.3} CPU-days without resume)",
        report.result.chosen_config,
        report.result.final_phase,
        report.result.totals.no_resume_cpu_days
    );
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let backend = Backend::open(&args.search.source)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for &m in &args.multipliers {
        let done = backend
            .search(&args.search, m)
            .with_context(|| format!("multiplier {m}"))?;
        w.serialize(SweepRow {
            multiplier: m,
            total_resume: done.result.totals.resume,
            total_no_resume: done.result.totals.no_resume,
            chosen_config: done.result.chosen_config,
            phases: done.result.final_phase,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    write_output(args.out.as_deref(), &bytes)
}

fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: RunReport =
        serde_json::from_str(&text).with_context(|| format!("parsing report {}", path.display()))?;
    if report.schema_version != SCHEMA_VERSION {
        bail!(
            "report schema version {} is not supported (expected {SCHEMA_VERSION})",
            report.schema_version
        );
    }
    Ok(report)
}

fn curve_path(out: Option<&Path>, delta: f64) -> PathBuf {
    let dir = out.and_then(Path::parent).unwrap_or(Path::new("."));
    dir.join(format!("curve_delta_{delta}.csv"))
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let table = load_runtime_table(&args.table, args.censoring)
        .with_context(|| format!("loading runtime table {}", args.table.display()))?;
    let report = args.report.as_deref().map(read_report).transpose()?;
    let config = match (&report, args.config) {
        (Some(r), _) => r.result.chosen_config,
        (None, Some(c)) => c,
        (None, None) => bail!("give --config or --report"),
    };
    let epsilon = args
        .epsilon
        .or(report.as_ref().map(|r| r.params.epsilon))
        .unwrap_or(0.2);
    let delta = args.delta.or(report.as_ref().map(|r| r.params.delta)).unwrap_or(0.2);
    let witness = check_eps_delta_optimal(&table, config, epsilon, delta, args.censoring)?;

    if args.curve {
        for &d in &args.deltas {
            let path = curve_path(args.out.as_deref(), d);
            let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
            for point in capped_mean_curve(&table, d, args.censoring)? {
                w.serialize(point)?;
            }
            w.flush()?;
        }
    }
    let mut json = serde_json::to_vec_pretty(&witness)?;
    json.push(b'\n');
    write_output(args.out.as_deref(), &json)
}

fn parse_model(spec: &str) -> Result<SyntheticModel> {
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
    let nums = parts
        .map(|p| f64::from_str(p).with_context(|| format!("bad number {p:?} in model {spec:?}")))
        .collect::<Result<Vec<f64>>>()?;
    match (kind.as_str(), nums.as_slice()) {
        ("constant", &[mean]) => Ok(SyntheticModel::Constant { mean }),
        ("lognormal", &[mu, sigma]) => Ok(SyntheticModel::LogNormal { mu, sigma }),
        ("heavytail", &[b]) => Ok(SyntheticModel::HeavyTail { b }),
        _ => bail!("unrecognised model {spec:?}; expected constant:MEAN, lognormal:MU:SIGMA or heavytail:B"),
    }
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    let models = args.models.iter().map(|m| parse_model(m)).collect::<Result<Vec<_>>>()?;
    let table = gen_synthetic(&models, args.instances, args.cap, args.kappa0, args.seed)?;
    save_runtime_table(&table, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_specs() {
        assert_eq!(
            parse_model("constant:3").unwrap(),
            SyntheticModel::Constant { mean: 3.0 }
        );
        assert_eq!(
            parse_model("LogNormal:0.5:1").unwrap(),
            SyntheticModel::LogNormal { mu: 0.5, sigma: 1.0 }
        );
        assert_eq!(
            parse_model("heavytail:100").unwrap(),
            SyntheticModel::HeavyTail { b: 100.0 }
        );
        assert!(parse_model("lognormal:1").is_err());
        assert!(parse_model("weibull:1:2").is_err());
        assert!(parse_model("constant:x").is_err());
    }

    #[test]
    fn curve_paths() {
        assert_eq!(curve_path(None, 0.1), PathBuf::from("./curve_delta_0.1.csv"));
        assert_eq!(
            curve_path(Some(Path::new("out/w.json")), 0.0),
            PathBuf::from("out/curve_delta_0.csv")
        );
    }
}
