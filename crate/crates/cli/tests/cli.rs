use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn leaps(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leaps"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn leaps")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = leaps(dir, args);
    assert!(
        out.status.success(),
        "leaps {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = leaps(dir, args);
    assert!(!out.status.success(), "leaps {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

/// A table where configuration 1 is clearly fastest.
fn separated_table(dir: &Path) -> PathBuf {
    ok(
        dir,
        &[
            "generate",
            "--model",
            "lognormal:2:0.5",
            "--model",
            "lognormal:0:0.3",
            "--model",
            "constant:20",
            "--model",
            "lognormal:1.5:1",
            "--instances",
            "400",
            "--cap",
            "100000",
            "--kappa0",
            "0.5",
            "--seed",
            "5",
            "--out",
            "t.csv",
        ],
    );
    dir.join("t.csv")
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("valid JSON")
}

#[test]
fn generate_writes_table_and_sidecar() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    let meta = json(&fs::read_to_string(dir.path().join("t.meta.json")).unwrap());
    assert_eq!(meta["cap_seconds"], 100000.0);
    assert_eq!(meta["kappa0_seconds"], 0.5);
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "instance_id,c0,c1,c2,c3");
    assert_eq!(lines.count(), 400);
    assert!(fails(dir.path(), &["generate", "--model", "gamma:1", "--out", "x.csv"]).contains("gamma"));
}

#[test]
fn run_reports_choice_and_both_totals() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    let args = [
        "run",
        "--table",
        "t.csv",
        "--epsilon",
        "0.2",
        "--delta",
        "0.2",
        "--zeta",
        "0.1",
        "--multiplier",
        "1.25",
        "--stopping",
        "ebg",
        "--seed",
        "7",
        "--trace",
        "trace.csv",
    ];
    let report = json(&ok(dir.path(), &args));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["tool"]["name"], "leaps");
    assert_eq!(report["params"]["multiplier"], 1.25);
    assert_eq!(report["params"]["stopping_rule"], "ebg");
    let result = &report["result"];
    assert_eq!(result["chosen_config"], 1);
    assert_eq!(result["chosen_label"], "c1");
    let totals = &result["totals"];
    let (no_resume, resume) = (
        totals["no_resume_seconds"].as_f64().unwrap(),
        totals["resume_seconds"].as_f64().unwrap(),
    );
    assert!(resume > 0.0 && resume <= no_resume);
    let days = totals["no_resume_cpu_days"].as_f64().unwrap();
    assert!((days - no_resume / 86400.0).abs() < 1e-12);

    let phases = result["phases"].as_array().unwrap();
    assert_eq!(phases.len() as u64, result["final_phase"].as_u64().unwrap());
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "phase,theta,tau,b,config_id,value,reason,samples_used,work_charged,sample_mean"
    );
    assert_eq!(lines.count(), 4 * phases.len());
}

#[test]
fn run_is_reproducible() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    let base = ["run", "--table", "t.csv", "--seed", "3", "--stopping", "bernstein"];
    let a = json(&ok(dir.path(), &[&base[..], &["--threads", "1"]].concat()));
    let b = json(&ok(dir.path(), &[&base[..], &["--threads", "3"]].concat()));
    for key in ["source", "params", "options", "result"] {
        assert_eq!(a[key], b[key], "{key}");
    }
    assert_eq!(
        serde_json::to_string(&a["result"]).unwrap(),
        serde_json::to_string(&b["result"]).unwrap()
    );
}

#[test]
fn invalid_flags_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    assert!(fails(dir.path(), &["run", "--table", "t.csv", "--epsilon", "0.4"]).contains("epsilon"));
    fails(dir.path(), &["run", "--table", "t.csv", "--delta", "1.5"]);
    fails(dir.path(), &["run", "--table", "t.csv", "--multiplier", "1.0"]);
    fails(dir.path(), &["run", "--table", "t.csv", "--stopping", "fastest"]);
    fails(dir.path(), &["run", "--table", "t.csv", "--threads", "0"]);
    fails(dir.path(), &["run", "--table", "missing.csv"]);
    fails(dir.path(), &["run"]);
    fails(dir.path(), &["verify", "--table", "t.csv"]);
}

#[test]
fn max_phases_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "generate",
            "--model",
            "constant:500",
            "--instances",
            "5",
            "--kappa0",
            "1",
            "--cap",
            "1e4",
            "--out",
            "slow.csv",
        ],
    );
    let err = fails(dir.path(), &["run", "--table", "slow.csv", "--max-phases", "2"]);
    assert!(err.contains("2 phases"), "{err}");
}

#[test]
fn strict_censoring_aborts_with_diagnostic_and_clamp_terminates() {
    let dir = TempDir::new().unwrap();
    // configuration 0 times out at the 8 s cap on every instance
    ok(
        dir.path(),
        &[
            "generate",
            "--model",
            "constant:8",
            "--model",
            "constant:6",
            "--instances",
            "20",
            "--kappa0",
            "1",
            "--cap",
            "8",
            "--out",
            "c.csv",
        ],
    );
    let err = fails(
        dir.path(),
        &["run", "--table", "c.csv", "--delta", "0.5", "--epsilon", "0.3"],
    );
    // tau is 6.1 s in phase 1 and first exceeds the cap in phase 2
    assert!(
        err.contains("phase 2") && err.contains("config 0") && err.contains("cap 8"),
        "{err}"
    );

    let report = json(&ok(
        dir.path(),
        &[
            "run",
            "--table",
            "c.csv",
            "--delta",
            "0.5",
            "--epsilon",
            "0.3",
            "--censoring",
            "clamp",
        ],
    ));
    assert_eq!(report["result"]["chosen_config"], 1);
    assert!(report["result"]["clamped_requests"].as_u64().unwrap() > 0);
}

#[test]
fn sweep_rows() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    let out = ok(
        dir.path(),
        &[
            "sweep",
            "--table",
            "t.csv",
            "--multipliers",
            "1.1,1.25,1.5,2.0",
            "--seed",
            "2",
        ],
    );
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "multiplier",
            "total_resume",
            "total_no_resume",
            "chosen_config",
            "phases"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let chosen: Vec<&str> = rows.iter().map(|r| &r[3]).collect();
    let agree = chosen.iter().filter(|&&c| c == chosen[0]).count();
    assert!(agree >= 3, "{chosen:?}");
    for r in &rows {
        let resume: f64 = r[1].parse().unwrap();
        let no_resume: f64 = r[2].parse().unwrap();
        assert!(resume <= no_resume);
    }
}

#[test]
fn single_multiplier_sweep_matches_run() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    ok(
        dir.path(),
        &[
            "sweep",
            "--table",
            "t.csv",
            "--multipliers",
            "1.5",
            "--seed",
            "4",
            "--out",
            "s.csv",
        ],
    );
    let report = json(&ok(
        dir.path(),
        &["run", "--table", "t.csv", "--multiplier", "1.5", "--seed", "4"],
    ));
    let mut reader = csv::Reader::from_path(dir.path().join("s.csv")).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    let totals = &report["result"]["totals"];
    assert_eq!(
        row[1].parse::<f64>().unwrap(),
        totals["resume_seconds"].as_f64().unwrap()
    );
    assert_eq!(
        row[2].parse::<f64>().unwrap(),
        totals["no_resume_seconds"].as_f64().unwrap()
    );
    assert_eq!(
        row[3].parse::<u64>().unwrap(),
        report["result"]["chosen_config"].as_u64().unwrap()
    );
    assert_eq!(
        row[4].parse::<u64>().unwrap(),
        report["result"]["final_phase"].as_u64().unwrap()
    );
}

#[test]
fn verify_report_and_curves() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    ok(
        dir.path(),
        &[
            "run",
            "--table",
            "t.csv",
            "--epsilon",
            "0.25",
            "--delta",
            "0.25",
            "--out",
            "r.json",
        ],
    );
    fs::create_dir(dir.path().join("v")).unwrap();
    ok(
        dir.path(),
        &[
            "verify",
            "--table",
            "t.csv",
            "--report",
            "r.json",
            "--curve",
            "--deltas",
            "0,0.1,0.25",
            "--out",
            "v/w.json",
        ],
    );
    let w = json(&fs::read_to_string(dir.path().join("v/w.json")).unwrap());
    assert_eq!(w["config"], 1);
    assert_eq!(w["is_optimal"], true);
    assert_eq!(w["epsilon"], 0.25);
    for d in ["0", "0.1", "0.25"] {
        let path = dir.path().join(format!("v/curve_delta_{d}.csv"));
        let mut reader = csv::Reader::from_path(&path).unwrap();
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            ["config_rank", "config_id", "value"]
        );
        let values: Vec<f64> = reader.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
        assert_eq!(values.len(), 4);
        assert!(values.windows(2).all(|w| w[0] <= w[1]), "{d}: {values:?}");
    }
}

#[test]
fn verify_explicit_config() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    let w = json(&ok(
        dir.path(),
        &[
            "verify",
            "--table",
            "t.csv",
            "--config",
            "1",
            "--epsilon",
            "0",
            "--delta",
            "0.1",
        ],
    ));
    assert_eq!(w["is_optimal"], true);
    let w = json(&ok(
        dir.path(),
        &[
            "verify",
            "--table",
            "t.csv",
            "--config",
            "2",
            "--epsilon",
            "0.1",
            "--delta",
            "0.1",
        ],
    ));
    assert_eq!(w["is_optimal"], false);
    assert!(w["witness_tau"].is_null());
    fails(dir.path(), &["verify", "--table", "t.csv", "--config", "9"]);
}

#[test]
fn subsampled_search() {
    let dir = TempDir::new().unwrap();
    separated_table(dir.path());
    let report = json(&ok(
        dir.path(),
        &["run", "--table", "t.csv", "--subsample-gamma", "0.5", "--seed", "1"],
    ));
    let searched = report["result"]["searched_configs"].as_array().unwrap();
    assert!(!searched.is_empty() && searched.len() <= 5);
    assert!(searched.contains(&report["result"]["chosen_config"]));
}

#[cfg(unix)]
#[test]
fn subprocess_mode() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    fs::create_dir(&inst).unwrap();
    for name in ["a.cnf", "b.cnf", "c.cnf"] {
        fs::write(inst.join(name), "").unwrap();
    }
    fs::write(dir.path().join("configs.json"), r#"[["sleep", "0.2"], ["true"]]"#).unwrap();
    let report = json(&ok(
        dir.path(),
        &[
            "run",
            "--exec-cmd",
            "{flags}",
            "--instances-dir",
            "inst",
            "--configs-json",
            "configs.json",
            "--timing",
            "wall",
            "--kappa0",
            "0.001",
            "--epsilon",
            "0.3",
            "--delta",
            "0.5",
            "--zeta",
            "0.5",
            "--stopping",
            "ebg",
            "--max-phases",
            "12",
            "--threads",
            "2",
        ],
    ));
    assert_eq!(report["source"]["mode"], "subprocess");
    assert_eq!(report["result"]["chosen_config"], 1);
    let err = fails(
        dir.path(),
        &[
            "run",
            "--exec-cmd",
            "sleep {flags}",
            "--instances-dir",
            "inst",
            "--configs-json",
            "configs.json",
        ],
    );
    assert!(err.contains("--kappa0"), "{err}");
}
