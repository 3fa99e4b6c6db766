use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::datasets::DatasetCache;
use super::results::{append_result, cell_key, read_results, ResultRow};
use crate::envs::{EnvConfig, TeacherTier};
use crate::trainer::{resolve_teacher, train, write_log, Hyperparameters, MethodName, RunConfig};
use crate::{Error, Result};

fn default_teachers() -> Vec<TeacherTier> {
    vec![TeacherTier::Generalization]
}

fn default_fractions() -> Vec<f64> {
    vec![0.5]
}

fn default_ratios() -> Vec<String> {
    vec!["32:32".into()]
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1]
}

/// A grid of runs. Axes that do not apply to a method collapse: offline-only
/// methods always use the whole budget offline, online-only methods none,
/// `betas` only varies teacher-mixture methods and `batch_ratios` only
/// methods that sample both stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub env: EnvConfig,
    pub methods: Vec<MethodName>,
    #[serde(default = "default_teachers")]
    pub teachers: Vec<TeacherTier>,
    pub budgets: Vec<u64>,
    #[serde(default = "default_fractions")]
    pub offline_fractions: Vec<f64>,
    /// Empty keeps each method's default.
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default = "default_ratios")]
    pub batch_ratios: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub deterministic_dataset: bool,
    #[serde(default)]
    pub hyper: Hyperparameters,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.cells()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Every run of the grid, validated, in a stable order.
    pub fn cells(&self) -> Result<Vec<RunConfig>> {
        if self.methods.is_empty() || self.budgets.is_empty() || self.seeds.is_empty() || self.teachers.is_empty() {
            return Err(Error::Config("sweep needs methods, budgets, seeds and teachers".into()));
        }
        if let Some(f) = self.offline_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::Config(format!("offline fraction {f} outside [0, 1]")));
        }
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for &teacher in &self.teachers {
            for &method in &self.methods {
                let m = crate::trainer::build_method_for(method, self.env.kind == crate::envs::EnvKind::Grid);
                for &budget in &self.budgets {
                    let offline: Vec<u64> = if m.is_offline_only() {
                        vec![budget]
                    } else if !m.data.dataset {
                        vec![0]
                    } else {
                        self.offline_fractions
                            .iter()
                            .map(|f| (f * budget as f64).round() as u64)
                            .collect()
                    };
                    let betas: Vec<Option<f64>> = if method.has_beta() && !self.betas.is_empty() {
                        self.betas.iter().map(|b| Some(*b)).collect()
                    } else {
                        vec![None]
                    };
                    let ratios: &[String] = if m.data.dataset && m.data.replay {
                        &self.batch_ratios
                    } else {
                        &self.batch_ratios[..1.min(self.batch_ratios.len())]
                    };
                    for &n_off in &offline {
                        for beta in &betas {
                            for ratio in ratios {
                                for &seed in &self.seeds {
                                    let mut cfg = RunConfig::new(method, teacher, budget, n_off, seed);
                                    cfg.env = self.env.clone();
                                    cfg.beta = *beta;
                                    cfg.batch_ratio = ratio.clone();
                                    cfg.deterministic_dataset = self.deterministic_dataset;
                                    cfg.hyper = self.hyper.clone();
                                    cfg.validate()?;
                                    if seen.insert(cell_key(&cfg)?) {
                                        out.push(cfg);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub results: PathBuf,
    pub data_dir: PathBuf,
    /// Training logs, one CSV per run; none when absent.
    pub logs_dir: Option<PathBuf>,
    pub verbose: bool,
}

impl SweepOptions {
    /// Results, datasets and logs under one directory.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            results: dir.join("results.csv"),
            data_dir: dir.join("datasets"),
            logs_dir: Some(dir.join("logs")),
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub completed: usize,
    pub skipped: usize,
    /// Cell key and error message of every failed run.
    pub failed: Vec<(String, String)>,
}

/// Calibrates each teacher once, writes every dataset the grid needs and
/// pins both into the cell configs so runs never recalibrate or recollect.
pub fn prepare_cells(cells: &[RunConfig], cache: &DatasetCache) -> Result<Vec<RunConfig>> {
    let mut epsilons: HashMap<(String, TeacherTier), f64> = HashMap::new();
    let mut out = Vec::with_capacity(cells.len());
    for cfg in cells {
        let env_key = serde_json::to_string(&cfg.env).map_err(|e| Error::Config(e.to_string()))?;
        let key = (env_key, cfg.teacher);
        let eps = match epsilons.get(&key) {
            Some(e) => *e,
            None => {
                let e = resolve_teacher(cfg)?.epsilon();
                epsilons.insert(key, e);
                e
            }
        };
        let mut c = cfg.clone();
        c.teacher_epsilon = Some(eps);
        if c.offline_episodes > 0 {
            let teacher = resolve_teacher(&c)?;
            c.dataset = Some(cache.ensure(
                &c.env,
                &teacher,
                c.teacher,
                c.offline_episodes,
                c.deterministic_dataset,
                c.seed,
            )?);
        }
        out.push(c);
    }
    Ok(out)
}

/// Cells without a row in `results`.
pub fn pending_cells(cells: Vec<RunConfig>, results: &Path) -> Result<(Vec<RunConfig>, usize)> {
    let done: BTreeSet<String> = read_results(results)?.iter().map(ResultRow::key).collect();
    let total = cells.len();
    let mut pending = Vec::new();
    for c in cells {
        if !done.contains(&cell_key(&c)?) {
            pending.push(c);
        }
    }
    let skipped = total - pending.len();
    Ok((pending, skipped))
}

/// File name for a run's training log.
pub fn log_file_name(cfg: &RunConfig) -> Result<String> {
    let key = cell_key(cfg)?;
    let safe: String = key
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    Ok(format!("{safe}.csv"))
}

/// Trains one cell, appends its row and writes its training log.
pub fn run_cell(cfg: &RunConfig, results: &Path, logs_dir: Option<&Path>) -> Result<ResultRow> {
    let out = train(cfg)?;
    let row = ResultRow::from_outcome(cfg, &out)?;
    if let Some(dir) = logs_dir {
        std::fs::create_dir_all(dir)?;
        write_log(&dir.join(log_file_name(cfg)?), &out.log)?;
    }
    append_result(results, &row)?;
    Ok(row)
}

/// Runs every pending cell in this process. Failed cells are reported, not
/// fatal; a rerun picks up exactly the cells without rows.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<SweepOutcome> {
    let cache = DatasetCache::new(&opts.data_dir);
    let (pending, skipped) = pending_cells(spec.cells()?, &opts.results)?;
    let cells = prepare_cells(&pending, &cache)?;
    let mut outcome = SweepOutcome {
        skipped,
        ..SweepOutcome::default()
    };
    for (i, cfg) in cells.iter().enumerate() {
        let key = cell_key(cfg)?;
        match run_cell(cfg, &opts.results, opts.logs_dir.as_deref()) {
            Ok(row) => {
                outcome.completed += 1;
                if opts.verbose {
                    eprintln!("[{}/{}] {key}: {:.3}", i + 1, cells.len(), row.success_rate);
                }
            }
            Err(e) => {
                if opts.verbose {
                    eprintln!("[{}/{}] {key}: FAILED {e}", i + 1, cells.len());
                }
                outcome.failed.push((key, e.to_string()));
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec::from_toml(
            r#"
methods = ["BC", "MPO", "R-CRR"]
budgets = [100, 200]
offline_fractions = [0.2, 0.5]
betas = [0.5, 1.0]
seeds = [0]
"#,
        )
        .unwrap()
    }

    #[test]
    fn axes_collapse_per_method() {
        let cells = spec().cells().unwrap();
        let count = |m: MethodName| cells.iter().filter(|c| c.method == m).count();
        assert_eq!(count(MethodName::Bc), 2);
        assert_eq!(count(MethodName::Mpo), 2);
        assert_eq!(count(MethodName::RCrr), 2 * 2 * 2);
        assert!(cells.iter().filter(|c| c.method == MethodName::Bc).all(|c| c.offline_episodes == c.budget));
        assert!(cells.iter().filter(|c| c.method == MethodName::Mpo).all(|c| c.offline_episodes == 0));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SweepSpec::from_toml("methods = []\nbudgets = [10]\n").is_err());
        assert!(SweepSpec::from_toml("methods = [\"BC\"]\nbudgets = [10]\noffline_fractions = [1.5]\n").is_err());
        assert!(SweepSpec::from_toml("methods = [\"BC\"]\nbudgets = [10]\nbogus = 1\n").is_err());
    }
}
