//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function takes plain numbers and JSON strings and returns a JSON string,
//! so the page needs no generated TypeScript types. The `*_json` functions hold the logic
//! and are what the native tests exercise.

use leaps_core::estimator::{union_term, EbgGrid, RunningStats};
use leaps_core::oracle::{gen_synthetic, CostLedger, SyntheticModel};
use leaps_core::problem::all_configs;
use leaps_core::schedule::phase_schedule;
use leaps_core::verify::{capped_mean_curve, check_eps_delta_optimal, opt_mean};
use leaps_core::{
    bernstein_radius, leaps_and_bounds, runtime_est, CensoringPolicy, EstimatorContext, ProblemSpec, SearchOptions,
    SearchParams, StoppingRule, TableOracle,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const CAP: f64 = 1e7;

type DemoResult<T> = Result<T, String>;

fn parse_models(models_json: &str) -> DemoResult<Vec<SyntheticModel>> {
    serde_json::from_str(models_json).map_err(|e| format!("models: {e}"))
}

fn to_json<T: Serialize>(value: &T) -> DemoResult<String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct TracePoint {
    j: u64,
    elapsed: f64,
    mean: f64,
    radius: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EstimatorTrace {
    theta: f64,
    tau: f64,
    b: u64,
    value: f64,
    reason: String,
    samples_used: u64,
    work_charged: f64,
    points: Vec<TracePoint>,
}

/// Runs one estimator call for a single synthetic configuration in phase 1 of a search over
/// `n` configurations and reports the running mean and confidence radius after every sample.
#[allow(clippy::too_many_arguments)]
pub fn estimator_trace_json(
    model_json: &str,
    n: usize,
    kappa0: f64,
    epsilon: f64,
    delta: f64,
    zeta: f64,
    rule: &str,
    seed: u64,
) -> DemoResult<String> {
    let model: SyntheticModel = serde_json::from_str(model_json).map_err(|e| format!("model: {e}"))?;
    let rule: StoppingRule = rule.parse().map_err(|e: leaps_core::Error| e.to_string())?;
    let params = SearchParams::new(epsilon, delta, zeta, kappa0)
        .with_rule(rule)
        .with_seed(seed);
    params.validate().map_err(|e| e.to_string())?;
    let spec = phase_schedule(&params, n.max(1), 1).map_err(|e| e.to_string())?;
    let m = 4096;
    let table = gen_synthetic(&[model], m, CAP, kappa0, seed).map_err(|e| e.to_string())?;
    let oracle = TableOracle::new(&table, CensoringPolicy::Clamp);
    let instances: Vec<usize> = (0..spec.b as usize).map(|j| j % m).collect();
    let ctx = EstimatorContext::new(&params, spec, n.max(1), &instances).recording(true);
    let mut ledger = CostLedger::new(1, m);
    let est = runtime_est(&ctx, 0, &oracle, &mut ledger, rule).map_err(|e| e.to_string())?;

    let mut stats = RunningStats::new();
    let mut grid = EbgGrid::new();
    let mut points = Vec::with_capacity(est.samples.len());
    for (idx, s) in est.samples.iter().enumerate() {
        let j = idx as u64 + 1;
        stats.push(s.elapsed);
        grid.advance(j, ctx.grid_advance, ctx.n, 1, zeta);
        let log_term = match rule {
            StoppingRule::Ebg => grid.x,
            _ => (3.0 * union_term(ctx.n, 1, j, zeta)).ln(),
        };
        let radius = (j >= 2)
            .then(|| bernstein_radius(stats.variance(), spec.tau, j, log_term).ok())
            .flatten();
        points.push(TracePoint {
            j,
            elapsed: s.elapsed,
            mean: stats.mean(),
            radius,
        });
    }
    to_json(&EstimatorTrace {
        theta: spec.theta,
        tau: spec.tau,
        b: spec.b,
        value: est.value,
        reason: format!("{:?}", est.reason),
        samples_used: est.samples_used,
        work_charged: est.work_charged,
        points,
    })
}

#[derive(Debug, Serialize)]
struct PhaseSummary {
    k: u32,
    theta: f64,
    tau: f64,
    b: u64,
    values: Vec<f64>,
    work: f64,
}

#[derive(Debug, Serialize)]
struct SearchSummary {
    chosen_config: usize,
    chosen_estimate: f64,
    opt: f64,
    opt_config: usize,
    is_optimal: bool,
    capped_mean_at_tau: f64,
    total_no_resume: f64,
    total_resume: f64,
    phases: Vec<PhaseSummary>,
}

/// Generates a table from `models_json` (an array of models) and searches it.
#[allow(clippy::too_many_arguments)]
pub fn run_search_json(
    models_json: &str,
    n_instances: usize,
    kappa0: f64,
    epsilon: f64,
    delta: f64,
    zeta: f64,
    multiplier: f64,
    rule: &str,
    seed: u64,
) -> DemoResult<String> {
    let models = parse_models(models_json)?;
    let rule: StoppingRule = rule.parse().map_err(|e: leaps_core::Error| e.to_string())?;
    let params = SearchParams::new(epsilon, delta, zeta, kappa0)
        .with_multiplier(multiplier)
        .with_rule(rule)
        .with_seed(seed);
    let table = gen_synthetic(&models, n_instances, CAP, kappa0, seed).map_err(|e| e.to_string())?;
    let oracle = TableOracle::new(&table, CensoringPolicy::Clamp);
    let configs = all_configs(&oracle);
    let problem = ProblemSpec::new(&oracle, &configs, kappa0).map_err(|e| e.to_string())?;
    let options = SearchOptions {
        threads: Some(1),
        max_phases: Some(60),
        ..SearchOptions::default()
    };
    let res = leaps_and_bounds(&problem, &params, &options).map_err(|e| e.to_string())?;
    let witness = check_eps_delta_optimal(&table, res.chosen_config, epsilon, delta, CensoringPolicy::Clamp)
        .map_err(|e| e.to_string())?;
    let opt = opt_mean(&table);
    to_json(&SearchSummary {
        chosen_config: res.chosen_config,
        chosen_estimate: res.chosen_estimate,
        opt: opt.value,
        opt_config: opt.config,
        is_optimal: witness.is_optimal,
        capped_mean_at_tau: witness.capped_mean_at_tau,
        total_no_resume: res.totals.no_resume,
        total_resume: res.totals.resume,
        phases: res
            .phases
            .iter()
            .map(|p| PhaseSummary {
                k: p.spec.k,
                theta: p.spec.theta,
                tau: p.spec.tau,
                b: p.spec.b,
                values: p.estimates.iter().map(|e| e.value).collect(),
                work: p.cost.no_resume,
            })
            .collect(),
    })
}

#[derive(Debug, Serialize)]
struct Curve {
    delta: f64,
    points: Vec<leaps_core::verify::CurvePoint>,
}

/// Sorted per-configuration means capped at each configuration's `delta` tail threshold, one
/// curve per entry of `deltas_json`.
pub fn capped_curves_json(
    models_json: &str,
    n_instances: usize,
    kappa0: f64,
    seed: u64,
    deltas_json: &str,
) -> DemoResult<String> {
    let models = parse_models(models_json)?;
    let deltas: Vec<f64> = serde_json::from_str(deltas_json).map_err(|e| format!("deltas: {e}"))?;
    let table = gen_synthetic(&models, n_instances, CAP, kappa0, seed).map_err(|e| e.to_string())?;
    let curves = deltas
        .iter()
        .map(|&delta| {
            Ok(Curve {
                delta,
                points: capped_mean_curve(&table, delta, CensoringPolicy::Clamp).map_err(|e| e.to_string())?,
            })
        })
        .collect::<DemoResult<Vec<_>>>()?;
    to_json(&curves)
}

fn js(r: DemoResult<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = estimatorTrace)]
#[allow(clippy::too_many_arguments)]
pub fn estimator_trace(
    model_json: &str,
    n: usize,
    kappa0: f64,
    epsilon: f64,
    delta: f64,
    zeta: f64,
    rule: &str,
    seed: u64,
) -> Result<String, JsError> {
    js(estimator_trace_json(
        model_json, n, kappa0, epsilon, delta, zeta, rule, seed,
    ))
}

#[wasm_bindgen(js_name = runSearch)]
#[allow(clippy::too_many_arguments)]
pub fn run_search(
    models_json: &str,
    n_instances: usize,
    kappa0: f64,
    epsilon: f64,
    delta: f64,
    zeta: f64,
    multiplier: f64,
    rule: &str,
    seed: u64,
) -> Result<String, JsError> {
    js(run_search_json(
        models_json,
        n_instances,
        kappa0,
        epsilon,
        delta,
        zeta,
        multiplier,
        rule,
        seed,
    ))
}

#[wasm_bindgen(js_name = cappedCurves)]
pub fn capped_curves(
    models_json: &str,
    n_instances: usize,
    kappa0: f64,
    seed: u64,
    deltas_json: &str,
) -> Result<String, JsError> {
    js(capped_curves_json(models_json, n_instances, kappa0, seed, deltas_json))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const MODELS: &str = r#"[
        {"kind": "log_normal", "mu": 1.0, "sigma": 0.8},
        {"kind": "log_normal", "mu": 0.2, "sigma": 0.5},
        {"kind": "heavy_tail", "b": 200.0},
        {"kind": "constant", "mean": 4.0}
    ]"#;

    #[test]
    fn trace_follows_estimate() {
        let out =
            estimator_trace_json(r#"{"kind": "constant", "mean": 1.0}"#, 10, 1.0, 0.2, 0.2, 0.1, "ebg", 0).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["reason"], "BernsteinConverged");
        assert_eq!(v["samples_used"], 6081);
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.len(), 6081);
        assert!(points[0]["radius"].is_null());
        let last = &points[6080];
        assert_eq!(last["mean"], 1.0);
        assert!(last["radius"].as_f64().unwrap() <= 0.2 / 3.0 * 2.0);
    }

    #[test]
    fn search_summary() {
        let out = run_search_json(MODELS, 500, 1.0, 0.2, 0.2, 0.1, 2.0, "bernstein", 3).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["is_optimal"], true);
        let phases = v["phases"].as_array().unwrap();
        assert!(!phases.is_empty());
        assert!(phases.iter().all(|p| p["values"].as_array().unwrap().len() == 4));
        assert!(v["total_resume"].as_f64().unwrap() <= v["total_no_resume"].as_f64().unwrap());
    }

    #[test]
    fn curves_sorted() {
        let out = capped_curves_json(MODELS, 300, 1.0, 1, "[0, 0.1, 0.25]").unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        let curves = v.as_array().unwrap();
        assert_eq!(curves.len(), 3);
        for c in curves {
            let values: Vec<f64> = c["points"]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| p["value"].as_f64().unwrap())
                .collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(run_search_json("[]", 10, 1.0, 0.2, 0.2, 0.1, 2.0, "ebg", 0).is_err());
        assert!(run_search_json(MODELS, 10, 1.0, 0.5, 0.2, 0.1, 2.0, "ebg", 0).is_err());
        assert!(run_search_json(MODELS, 10, 1.0, 0.2, 0.2, 0.1, 2.0, "greedy", 0).is_err());
        assert!(capped_curves_json("nope", 10, 1.0, 0, "[0]").is_err());
    }
}
