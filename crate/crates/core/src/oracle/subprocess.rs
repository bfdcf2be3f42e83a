//! Runs a real solver binary per measurement.
//!
//! The command template is split on whitespace (no shell quoting). A token equal to
//! `{flags}` expands to the configuration's flag list; `{instance}` and `{flags}` inside a
//! larger token are substituted textually (flags joined by spaces).
//!
//! The child is polled with a delay growing from [`FIRST_POLL`] to [`POLL_INTERVAL`] and
//! killed once its time reaches the limit.
//! CPU time is read from `/proc/<pid>/stat` while running (clock-tick resolution, 10 ms on
//! common kernels) and from `wait4` rusage at exit, and covers the child process itself.
//! The reported `elapsed` is therefore within one poll interval plus one tick of the true
//! capped time, well inside 0.1 s.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{Measurement, Oracle};

pub const POLL_INTERVAL: Duration = Duration::from_millis(10);
pub const FIRST_POLL: Duration = Duration::from_micros(100);

/// Environment variable naming the scratch directory the solver runs in.
pub const SCRATCH_ENV: &str = "LEAPS_SCRATCH_DIR";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingMode {
    /// User + system CPU time of the child.
    #[default]
    Cpu,
    Wall,
}

impl FromStr for TimingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cpu" => Ok(TimingMode::Cpu),
            "wall" => Ok(TimingMode::Wall),
            other => Err(Error::invalid("timing", format!("unknown mode {other:?}"))),
        }
    }
}

/// What a nonzero solver exit means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitPolicy {
    #[default]
    Fail,
    TreatAsTimeout,
}

impl FromStr for ExitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fail" => Ok(ExitPolicy::Fail),
            "timeout" | "treat-as-timeout" => Ok(ExitPolicy::TreatAsTimeout),
            other => Err(Error::invalid("exit-policy", format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubprocessOracle {
    template: Vec<String>,
    instances: Vec<PathBuf>,
    configs: Vec<Vec<String>>,
    timing: TimingMode,
    exit_policy: ExitPolicy,
    scratch_dir: PathBuf,
}

/// Reads a config-space file: a JSON array of flag arrays.
pub fn read_config_space(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let configs: Vec<Vec<String>> = serde_json::from_str(&text)?;
    if configs.is_empty() {
        return Err(Error::NoConfigs);
    }
    Ok(configs)
}

/// Regular files directly inside `dir`, sorted by name.
pub fn list_instances(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyInstances);
    }
    Ok(files)
}

impl SubprocessOracle {
    pub fn new(template: &str, instances: Vec<PathBuf>, configs: Vec<Vec<String>>) -> Result<Self> {
        let template: Vec<String> = template.split_whitespace().map(str::to_owned).collect();
        if template.is_empty() {
            return Err(Error::invalid("exec-cmd", "empty command template"));
        }
        if instances.is_empty() {
            return Err(Error::EmptyInstances);
        }
        if configs.is_empty() {
            return Err(Error::NoConfigs);
        }
        let scratch_dir = std::env::var_os(SCRATCH_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(std::env::temp_dir);
        Ok(SubprocessOracle {
            template,
            instances,
            configs,
            timing: TimingMode::default(),
            exit_policy: ExitPolicy::default(),
            scratch_dir,
        })
    }

    pub fn from_paths(template: &str, instances_dir: &Path, configs_json: &Path) -> Result<Self> {
        Self::new(
            template,
            list_instances(instances_dir)?,
            read_config_space(configs_json)?,
        )
    }

    pub fn with_timing(mut self, timing: TimingMode) -> Self {
        self.timing = timing;
        self
    }

    pub fn with_exit_policy(mut self, policy: ExitPolicy) -> Self {
        self.exit_policy = policy;
        self
    }

    pub fn with_scratch_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.scratch_dir = dir.into();
        self
    }

    pub fn instances(&self) -> &[PathBuf] {
        &self.instances
    }

    /// The argv for one run.
    pub fn command_line(&self, config: usize, instance: usize) -> Vec<String> {
        let flags = &self.configs[config];
        let instance = self.instances[instance].to_string_lossy();
        let mut argv = Vec::new();
        for token in &self.template {
            if token == "{flags}" {
                argv.extend(flags.iter().cloned());
            } else {
                argv.push(
                    token
                        .replace("{instance}", &instance)
                        .replace("{flags}", &flags.join(" ")),
                );
            }
        }
        argv
    }

    fn run(&self, config: usize, instance: usize, limit: f64) -> Result<Measurement> {
        let argv = self.command_line(config, instance);
        let child = Command::new(&argv[0])
            .args(&argv[1..])
            .current_dir(&self.scratch_dir)
            .env("TMPDIR", &self.scratch_dir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()?;
        let pid = child.id() as libc::pid_t;
        // The child is reaped through wait4 below; `Child` must not touch it again.
        drop(child);

        let start = Instant::now();
        let limit_dur = Duration::from_secs_f64(limit);
        let mut backoff = FIRST_POLL;
        loop {
            if let Some((status, rusage)) = try_wait4(pid)? {
                let spent = match self.timing {
                    TimingMode::Wall => start.elapsed().as_secs_f64(),
                    TimingMode::Cpu => rusage_seconds(&rusage),
                };
                if spent >= limit {
                    return Ok(Measurement::timed_out(config, instance, limit));
                }
                let ok = libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0;
                if ok {
                    return Ok(Measurement::finished(config, instance, limit, spent));
                }
                return match self.exit_policy {
                    ExitPolicy::TreatAsTimeout => Ok(Measurement::timed_out(config, instance, limit)),
                    ExitPolicy::Fail => Err(Error::SolverFailed {
                        config,
                        instance,
                        status: describe_status(status),
                    }),
                };
            }
            let spent = match self.timing {
                TimingMode::Wall => start.elapsed().as_secs_f64(),
                TimingMode::Cpu => proc_cpu_seconds(pid).unwrap_or(0.0),
            };
            if spent >= limit {
                kill_and_reap(pid)?;
                return Ok(Measurement::timed_out(config, instance, limit));
            }
            let mut nap = backoff;
            backoff = (backoff * 2).min(POLL_INTERVAL);
            if self.timing == TimingMode::Wall {
                nap = nap.min(limit_dur.saturating_sub(start.elapsed()));
            }
            std::thread::sleep(nap.max(FIRST_POLL));
        }
    }
}

impl Oracle for SubprocessOracle {
    fn measure(&self, config: usize, instance: usize, limit: f64) -> Result<Measurement> {
        if config >= self.configs.len() {
            return Err(Error::UnknownConfig(config));
        }
        if instance >= self.instances.len() {
            return Err(Error::UnknownInstance(instance));
        }
        if !(limit > 0.0 && limit.is_finite()) {
            return Err(Error::invalid("limit", format!("{limit} must be positive and finite")));
        }
        self.run(config, instance, limit)
    }

    fn n_configs(&self) -> usize {
        self.configs.len()
    }

    fn n_instances(&self) -> usize {
        self.instances.len()
    }
}

fn try_wait4(pid: libc::pid_t) -> Result<Option<(libc::c_int, libc::rusage)>> {
    let mut status: libc::c_int = 0;
    // SAFETY: rusage is plain old data; wait4 fills it on success.
    let mut rusage: libc::rusage = unsafe { std::mem::zeroed() };
    loop {
        // SAFETY: pid is our own unreaped child; pointers are valid for the call.
        let rc = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut rusage) };
        if rc == pid {
            return Ok(Some((status, rusage)));
        }
        if rc == 0 {
            return Ok(None);
        }
        let err = std::io::Error::last_os_error();
        if err.kind() != std::io::ErrorKind::Interrupted {
            return Err(err.into());
        }
    }
}

fn kill_and_reap(pid: libc::pid_t) -> Result<()> {
    // SAFETY: pid is our own child and has not been reaped yet.
    if unsafe { libc::kill(pid, libc::SIGKILL) } != 0 {
        let err = std::io::Error::last_os_error();
        if err.raw_os_error() != Some(libc::ESRCH) {
            return Err(err.into());
        }
    }
    let mut status = 0;
    loop {
        // SAFETY: as above; blocking wait to reap the killed child.
        let rc = unsafe { libc::waitpid(pid, &mut status, 0) };
        if rc == pid {
            return Ok(());
        }
        let err = std::io::Error::last_os_error();
        if err.kind() != std::io::ErrorKind::Interrupted {
            return Err(err.into());
        }
    }
}

fn rusage_seconds(r: &libc::rusage) -> f64 {
    let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 * 1e-6;
    tv(r.ru_utime) + tv(r.ru_stime)
}

/// utime + stime of a live process from `/proc/<pid>/stat`.
fn proc_cpu_seconds(pid: libc::pid_t) -> Option<f64> {
    let stat = fs::read_to_string(format!("/proc/{pid}/stat")).ok()?;
    // the command name may contain spaces; fields resume after the last ')'
    let rest = &stat[stat.rfind(')')? + 2..];
    let fields: Vec<&str> = rest.split_whitespace().collect();
    // rest starts at field 3 (state); utime and stime are fields 14 and 15
    let utime: f64 = fields.get(11)?.parse().ok()?;
    let stime: f64 = fields.get(12)?.parse().ok()?;
    // SAFETY: sysconf has no preconditions.
    let ticks = unsafe { libc::sysconf(libc::_SC_CLK_TCK) } as f64;
    Some((utime + stime) / ticks)
}

fn describe_status(status: libc::c_int) -> String {
    if libc::WIFEXITED(status) {
        format!("exit code {}", libc::WEXITSTATUS(status))
    } else if libc::WIFSIGNALED(status) {
        format!("signal {}", libc::WTERMSIG(status))
    } else {
        format!("status {status}")
    }
}
