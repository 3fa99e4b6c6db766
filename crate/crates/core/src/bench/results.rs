use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::trainer::{MethodName, RunConfig, TrainOutcome};
use crate::{Error, Result};

/// Column order of the results CSV.
pub const RESULT_COLUMNS: [&str; 14] = [
    "method",
    "env",
    "teacher",
    "budget",
    "offline_episodes",
    "offline_fraction",
    "beta",
    "batch_ratio",
    "seed",
    "success_rate",
    "stderr",
    "gradient_steps",
    "episodes_offline_used",
    "episodes_online_used",
];

/// One completed run. `beta` and `batch_ratio` are empty for methods without
/// a teacher mixture or without two data sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: MethodName,
    pub env: String,
    pub teacher: String,
    pub budget: u64,
    pub offline_episodes: u64,
    pub offline_fraction: f64,
    pub beta: Option<f64>,
    pub batch_ratio: Option<String>,
    pub seed: u64,
    pub success_rate: f64,
    pub stderr: f64,
    pub gradient_steps: u64,
    pub episodes_offline_used: u64,
    pub episodes_online_used: u64,
}

/// Identity of a sweep cell; rows with equal keys are the same run.
pub fn cell_key(cfg: &RunConfig) -> Result<String> {
    let m = cfg.method_config()?;
    let beta = m.beta.map_or(String::new(), |b| b.to_string());
    let ratio = if m.data.dataset && m.data.replay {
        cfg.ratio()?.to_string()
    } else {
        String::new()
    };
    Ok(format!(
        "{}|{}|{}|{}|{}|{}|{}|{}",
        cfg.method,
        cfg.env.kind.id(),
        cfg.teacher.name(),
        cfg.budget,
        cfg.offline_episodes,
        beta,
        ratio,
        cfg.seed
    ))
}

impl ResultRow {
    pub fn from_outcome(cfg: &RunConfig, out: &TrainOutcome) -> Result<Self> {
        let m = cfg.method_config()?;
        let ratio = cfg.ratio()?.to_string();
        Ok(Self {
            method: cfg.method,
            env: cfg.env.kind.id().to_string(),
            teacher: cfg.teacher.name().to_string(),
            budget: cfg.budget,
            offline_episodes: cfg.offline_episodes,
            offline_fraction: cfg.offline_fraction(),
            beta: m.beta,
            batch_ratio: (m.data.dataset && m.data.replay).then_some(ratio),
            seed: cfg.seed,
            success_rate: out.eval.success_rate,
            stderr: out.eval.stderr,
            gradient_steps: out.stats.gradient_steps,
            episodes_offline_used: out.ledger.offline_used(),
            episodes_online_used: out.ledger.online_used(),
        })
    }

    pub fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}",
            self.method,
            self.env,
            self.teacher,
            self.budget,
            self.offline_episodes,
            self.beta.map_or(String::new(), |b| b.to_string()),
            self.batch_ratio.as_deref().unwrap_or(""),
            self.seed
        )
    }
}

/// All rows of a results file; a missing file has none.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(RESULT_COLUMNS) {
        return Err(Error::Format(format!(
            "{} does not have the results schema",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

struct FileLock(PathBuf);

impl FileLock {
    fn acquire(target: &Path) -> Result<Self> {
        let mut path = target.as_os_str().to_owned();
        path.push(".lock");
        let path = PathBuf::from(path);
        for _ in 0..6000 {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(Self(path)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    std::thread::sleep(Duration::from_millis(10))
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(Error::InvalidArgument(format!("timed out waiting for {}", path.display())))
    }
}

impl Drop for FileLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Appends one row by rewriting the file to a temporary sibling and renaming
/// it over the original, so readers never see a partial row. Concurrent
/// appenders serialize on a lock file.
pub fn append_result(path: &Path, row: &ResultRow) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let _lock = FileLock::acquire(path)?;
    let mut bytes = if path.exists() { fs::read(path)? } else { Vec::new() };
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(bytes.is_empty())
            .from_writer(&mut bytes);
        w.serialize(row)?;
        w.flush()?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Mean and spread over seeds of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: MethodName,
    pub env: String,
    pub teacher: String,
    pub budget: u64,
    pub offline_episodes: u64,
    pub offline_fraction: f64,
    pub beta: Option<f64>,
    pub batch_ratio: Option<String>,
    pub seeds: usize,
    pub mean_success: f64,
    /// Standard error of the mean across seeds; 0 for a single seed.
    pub stderr_across_seeds: f64,
    pub min_success: f64,
    pub max_success: f64,
}

/// Groups rows by everything but the seed, in a stable order.
pub fn aggregate(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = r.key();
        let cell = key.rsplit_once('|').map_or(key.as_str(), |(c, _)| c).to_string();
        groups.entry(cell).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let n = g.len();
            let xs: Vec<f64> = g.iter().map(|r| r.success_rate).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            let first = g[0];
            CellSummary {
                method: first.method,
                env: first.env.clone(),
                teacher: first.teacher.clone(),
                budget: first.budget,
                offline_episodes: first.offline_episodes,
                offline_fraction: first.offline_fraction,
                beta: first.beta,
                batch_ratio: first.batch_ratio.clone(),
                seeds: n,
                mean_success: mean,
                stderr_across_seeds: stderr,
                min_success: xs.iter().cloned().fold(f64::INFINITY, f64::min),
                max_success: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}
