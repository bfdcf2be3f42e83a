//! Censored runtime tables: a dense (configuration x instance) matrix of seconds with a cap.
//!
//! On disk a table is a CSV file with one row per instance,
//!
//! ```text
//! instance_id,<config_label_0>,...,<config_label_{n-1}>
//! inst-0,12.5,900,3.25
//! ```
//!
//! plus a sidecar `<stem>.meta.json` holding `{"cap_seconds": .., "kappa0_seconds": ..}`.
//! A cell equal to the cap is censored: the true runtime is at least the cap.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What to do when a request reaches past the information a table holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensoringPolicy {
    /// Fail loudly.
    #[default]
    Strict,
    /// Clamp to the cap and log a warning.
    Clamp,
}

impl FromStr for CensoringPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(CensoringPolicy::Strict),
            "clamp" => Ok(CensoringPolicy::Clamp),
            other => Err(Error::invalid("censoring", format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub cap_seconds: f64,
    pub kappa0_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeTable {
    n_configs: usize,
    n_instances: usize,
    // config-major: values[i * n_instances + j]
    values: Vec<f64>,
    cap: f64,
    kappa0: f64,
    config_labels: Vec<String>,
    instance_labels: Vec<String>,
}

impl RuntimeTable {
    /// Builds a table from per-configuration rows with default labels `c<i>` / `j<j>`.
    pub fn from_rows(rows: Vec<Vec<f64>>, cap: f64, kappa0: f64) -> Result<Self> {
        let n_configs = rows.len();
        let n_instances = rows.first().map_or(0, Vec::len);
        let config_labels = (0..n_configs).map(|i| format!("c{i}")).collect();
        let instance_labels = (0..n_instances).map(|j| format!("j{j}")).collect();
        Self::with_labels(rows, cap, kappa0, config_labels, instance_labels)
    }

    pub fn with_labels(
        rows: Vec<Vec<f64>>,
        cap: f64,
        kappa0: f64,
        config_labels: Vec<String>,
        instance_labels: Vec<String>,
    ) -> Result<Self> {
        let n_configs = rows.len();
        let n_instances = rows.first().map_or(0, Vec::len);
        if n_configs == 0 || n_instances == 0 {
            return Err(Error::invalid(
                "table",
                "needs at least one configuration and one instance",
            ));
        }
        if rows.iter().any(|r| r.len() != n_instances) {
            return Err(Error::invalid("table", "ragged rows"));
        }
        if config_labels.len() != n_configs || instance_labels.len() != n_instances {
            return Err(Error::invalid("table", "label count does not match dimensions"));
        }
        check_bounds(cap, kappa0)?;
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        for (idx, &v) in values.iter().enumerate() {
            if !(v >= kappa0 && v <= cap) {
                return Err(Error::invalid(
                    "table",
                    format!(
                        "config {} instance {}: value {v} outside [{kappa0}, {cap}]",
                        idx / n_instances,
                        idx % n_instances
                    ),
                ));
            }
        }
        Ok(RuntimeTable {
            n_configs,
            n_instances,
            values,
            cap,
            kappa0,
            config_labels,
            instance_labels,
        })
    }

    pub fn n_configs(&self) -> usize {
        self.n_configs
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn config_labels(&self) -> &[String] {
        &self.config_labels
    }

    pub fn instance_labels(&self) -> &[String] {
        &self.instance_labels
    }

    #[inline]
    pub fn get(&self, config: usize, instance: usize) -> f64 {
        self.values[config * self.n_instances + instance]
    }

    /// Runtimes of one configuration across all instances.
    pub fn row(&self, config: usize) -> &[f64] {
        let start = config * self.n_instances;
        &self.values[start..start + self.n_instances]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_instances)
    }

    #[inline]
    pub fn is_censored(&self, config: usize, instance: usize) -> bool {
        self.get(config, instance) >= self.cap
    }

    pub fn censored_count(&self, config: usize) -> usize {
        self.row(config).iter().filter(|&&v| v >= self.cap).count()
    }

    pub fn has_censored(&self) -> bool {
        self.values.iter().any(|&v| v >= self.cap)
    }

    pub fn meta(&self) -> TableMeta {
        TableMeta {
            cap_seconds: self.cap,
            kappa0_seconds: self.kappa0,
        }
    }

    pub fn load(path: impl AsRef<Path>, policy: CensoringPolicy) -> Result<Self> {
        load_runtime_table(path, policy)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_runtime_table(self, path)
    }
}

fn check_bounds(cap: f64, kappa0: f64) -> Result<()> {
    if !(kappa0.is_finite() && kappa0 > 0.0) {
        return Err(Error::invalid("kappa0", format!("{kappa0} must be positive")));
    }
    if !(cap.is_finite() && cap >= kappa0) {
        return Err(Error::invalid(
            "cap",
            format!("{cap} must be finite and at least kappa0"),
        ));
    }
    Ok(())
}

/// Sidecar path for a table: `runs.csv` -> `runs.meta.json`.
pub fn meta_path(table: &Path) -> PathBuf {
    table.with_extension("meta.json")
}

fn find_meta(table: &Path) -> Option<PathBuf> {
    let primary = meta_path(table);
    if primary.exists() {
        return Some(primary);
    }
    // also accept `runs.csv.meta.json`
    let mut appended = table.as_os_str().to_owned();
    appended.push(".meta.json");
    let appended = PathBuf::from(appended);
    appended.exists().then_some(appended)
}

pub fn read_meta(table: &Path) -> Result<TableMeta> {
    let path = find_meta(table).ok_or_else(|| Error::MissingMetadata(meta_path(table)))?;
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: TableMeta = serde_json::from_str(&text)?;
    check_bounds(meta.cap_seconds, meta.kappa0_seconds)?;
    Ok(meta)
}

/// Loads and validates a table. In `Clamp` mode out-of-range cells are clamped into
/// `[kappa0, cap]` with a warning instead of failing.
pub fn load_runtime_table(path: impl AsRef<Path>, policy: CensoringPolicy) -> Result<RuntimeTable> {
    let path = path.as_ref();
    let meta = read_meta(path)?;
    let (cap, kappa0) = (meta.cap_seconds, meta.kappa0_seconds);

    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;

    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.get(0) != Some("instance_id") {
        return Err(parse_err(1, "first header column must be `instance_id`".into()));
    }
    let config_labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let n_configs = config_labels.len();
    if n_configs == 0 {
        return Err(parse_err(1, "no configuration columns".into()));
    }

    let mut instance_labels = Vec::new();
    // instance-major while reading, transposed below
    let mut cells: Vec<f64> = Vec::new();
    let mut clamped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n_configs + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", n_configs + 1, record.len()),
            ));
        }
        let instance = instance_labels.len();
        instance_labels.push(record[0].to_owned());
        for (config, field) in record.iter().skip(1).enumerate() {
            let mut v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("bad number {field:?}")))?;
            if v.is_nan() {
                return Err(parse_err(line, "NaN runtime".into()));
            }
            if !(v >= kappa0 && v <= cap) {
                match policy {
                    CensoringPolicy::Strict => {
                        return Err(Error::OutOfRange {
                            path: path.to_path_buf(),
                            config,
                            instance,
                            value: v,
                            kappa0,
                            cap,
                        })
                    }
                    CensoringPolicy::Clamp => {
                        v = v.clamp(kappa0, cap);
                        clamped += 1;
                    }
                }
            }
            cells.push(v);
        }
    }
    if instance_labels.is_empty() {
        return Err(parse_err(2, "no instance rows".into()));
    }
    if clamped > 0 {
        log::warn!("{}: clamped {clamped} cells into [{kappa0}, {cap}]", path.display());
    }

    let n_instances = instance_labels.len();
    let mut values = vec![0.0; n_configs * n_instances];
    for (j, row) in cells.chunks_exact(n_configs).enumerate() {
        for (i, &v) in row.iter().enumerate() {
            values[i * n_instances + j] = v;
        }
    }
    Ok(RuntimeTable {
        n_configs,
        n_instances,
        values,
        cap,
        kappa0,
        config_labels,
        instance_labels,
    })
}

/// Writes the CSV and its metadata sidecar. Values use the shortest decimal form that
/// parses back to the same `f64`.
pub fn save_runtime_table(table: &RuntimeTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid("path", format!("{other:?}")),
    })?;
    let mut header = Vec::with_capacity(table.n_configs + 1);
    header.push("instance_id".to_owned());
    header.extend(table.config_labels.iter().cloned());
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(table.n_configs + 1);
    for j in 0..table.n_instances {
        record.clear();
        record.push(table.instance_labels[j].clone());
        for i in 0..table.n_configs {
            record.push(format!("{}", table.get(i, j)));
        }
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;

    let meta = meta_path(path);
    let text = serde_json::to_string_pretty(&table.meta())?;
    fs::write(&meta, text).map_err(|e| Error::io(&meta, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_table(dir: &Path, csv: &str, cap: f64, kappa0: f64) -> PathBuf {
        let path = dir.join("t.csv");
        fs::write(&path, csv).unwrap();
        fs::write(
            meta_path(&path),
            format!(r#"{{"cap_seconds": {cap}, "kappa0_seconds": {kappa0}}}"#),
        )
        .unwrap();
        path
    }

    #[test]
    fn loads_small_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_table(dir.path(), "instance_id,a,b\nx,1,2\ny,3,4\n", 900.0, 1.0);
        let t = load_runtime_table(&path, CensoringPolicy::Strict).unwrap();
        assert_eq!((t.n_configs(), t.n_instances()), (2, 2));
        // column a is config 0: instances x, y
        assert_eq!(t.row(0), &[1.0, 3.0]);
        assert_eq!(t.row(1), &[2.0, 4.0]);
        assert_eq!(t.config_labels(), &["a", "b"]);
        assert_eq!(t.cap(), 900.0);
    }

    #[test]
    fn value_below_kappa0_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_table(dir.path(), "instance_id,a\nx,0.5\n", 900.0, 1.0);
        let err = load_runtime_table(&path, CensoringPolicy::Strict).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { value, .. } if value == 0.5));
        let t = load_runtime_table(&path, CensoringPolicy::Clamp).unwrap();
        assert_eq!(t.get(0, 0), 1.0);
    }

    #[test]
    fn cap_cell_is_censored() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_table(dir.path(), "instance_id,a,b\nx,900,2\n", 900.0, 1.0);
        let t = load_runtime_table(&path, CensoringPolicy::Strict).unwrap();
        assert!(t.is_censored(0, 0));
        assert!(!t.is_censored(1, 0));
        assert_eq!(t.censored_count(0), 1);
    }

    #[test]
    fn ragged_and_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_table(dir.path(), "instance_id,a,b\nx,1\n", 900.0, 1.0);
        assert!(matches!(
            load_runtime_table(&path, CensoringPolicy::Strict),
            Err(Error::Parse { .. })
        ));
        let path = write_table(dir.path(), "instance_id,a\nx,fast\n", 900.0, 1.0);
        assert!(matches!(
            load_runtime_table(&path, CensoringPolicy::Strict),
            Err(Error::Parse { line: 2, .. })
        ));
        let path = write_table(dir.path(), "inst,a\nx,1\n", 900.0, 1.0);
        assert!(matches!(
            load_runtime_table(&path, CensoringPolicy::Strict),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "instance_id,a\nx,1\n").unwrap();
        assert!(matches!(
            load_runtime_table(&path, CensoringPolicy::Strict),
            Err(Error::MissingMetadata(_))
        ));
    }

    #[test]
    fn appended_sidecar_name_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "instance_id,a\nx,1\n").unwrap();
        fs::write(
            dir.path().join("t.csv.meta.json"),
            r#"{"cap_seconds": 5, "kappa0_seconds": 1}"#,
        )
        .unwrap();
        assert_eq!(load_runtime_table(&path, CensoringPolicy::Strict).unwrap().cap(), 5.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn save_load_is_identity(
            rows in (1usize..5, 1usize..12).prop_flat_map(|(n, m)| {
                proptest::collection::vec(proptest::collection::vec(0.01f64..1e4, m), n)
            })
        ) {
            let table = RuntimeTable::from_rows(rows, 1e4, 0.01).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rt.csv");
            table.save(&path).unwrap();
            let back = RuntimeTable::load(&path, CensoringPolicy::Strict).unwrap();
            prop_assert_eq!(back, table);
        }
    }
}
