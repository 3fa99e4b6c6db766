//! Benchmark driver: dataset collection, single runs, sweeps, evaluation of
//! checkpoints and per-cell aggregates for plotting.

use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode};

use clap::{Parser, Subcommand, ValueEnum};

use policy_finetune::approx::Checkpoint;
use policy_finetune::bench::{
    aggregate, append_result, cell_key, default_results_dir, log_file_name, pending_cells, prepare_cells, read_results,
    run_cell, write_summary, DatasetCache, ResultRow, SweepOptions, SweepSpec,
};
use policy_finetune::datastore::OfflineDataset;
use policy_finetune::domain::{ActionSelection, RandomStream};
use policy_finetune::envs::{make_teacher, CalibrationOptions, EnvConfig, GridObservation, TeacherTier};
use policy_finetune::trainer::{evaluate_with, write_log, RunConfig};
use policy_finetune::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "pfbench", version, about = "Teacher-guided policy finetuning benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvArg {
    Grid,
    GridFeatures,
    Point,
}

impl EnvArg {
    fn config(self) -> EnvConfig {
        match self {
            EnvArg::Grid => EnvConfig::grid(),
            EnvArg::GridFeatures => EnvConfig {
                grid_observation: GridObservation::Features,
                ..EnvConfig::grid()
            },
            EnvArg::Point => EnvConfig::point(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TierArg {
    Mastery,
    Generalization,
}

impl From<TierArg> for TeacherTier {
    fn from(t: TierArg) -> Self {
        match t {
            TierArg::Mastery => TeacherTier::Mastery,
            TierArg::Generalization => TeacherTier::Generalization,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Roll out a calibrated teacher and save the episodes as a dataset file.
    Collect {
        #[arg(long, value_enum, default_value = "grid")]
        env: EnvArg,
        #[arg(long, value_enum, default_value = "generalization")]
        teacher: TierArg,
        /// Calibration target; the tier default (0.8 / 0.4) when omitted.
        #[arg(long)]
        teacher_success: Option<f64>,
        #[arg(long)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Execute the teacher's mode action instead of sampling.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Train one run config and append its row to the results CSV.
    Run {
        config: PathBuf,
        /// Results CSV; defaults to $PFBENCH_RESULTS_DIR/results.csv.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Directory for the training log; defaults to logs/ beside the results.
        #[arg(long)]
        logs_dir: Option<PathBuf>,
        /// Also write the final policy checkpoint here.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Expand a sweep spec and run every cell without a result row.
    Sweep {
        spec: PathBuf,
        /// Results directory; defaults to $PFBENCH_RESULTS_DIR or ./results.
        #[arg(long)]
        results_dir: Option<PathBuf>,
        /// Cells run concurrently as separate processes.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Print the cells that would run and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Evaluate a policy checkpoint.
    Eval {
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "grid")]
        env: EnvArg,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample actions instead of executing the mode.
        #[arg(long)]
        stochastic: bool,
    },
    /// Aggregate a results CSV over seeds into one row per cell.
    ReportData {
        /// Defaults to $PFBENCH_RESULTS_DIR/results.csv.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownMethod(_) | Error::MissingDataset(_) | Error::InvalidArgument(_) => {
            EXIT_CONFIG
        }
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Cmd) -> policy_finetune::Result<u8> {
    match cmd {
        Cmd::Collect {
            env,
            teacher,
            teacher_success,
            episodes,
            seed,
            deterministic,
            out,
            force,
        } => collect(env, teacher.into(), teacher_success, episodes, seed, deterministic, &out, force),
        Cmd::Run {
            config,
            results,
            logs_dir,
            checkpoint,
        } => run(&config, results, logs_dir, checkpoint),
        Cmd::Sweep {
            spec,
            results_dir,
            jobs,
            dry_run,
        } => sweep(&spec, results_dir.unwrap_or_else(default_results_dir), jobs, dry_run),
        Cmd::Eval {
            checkpoint,
            env,
            episodes,
            seed,
            stochastic,
        } => eval(&checkpoint, env, episodes, seed, stochastic),
        Cmd::ReportData { results, out } => {
            let path = results.unwrap_or_else(|| default_results_dir().join("results.csv"));
            let rows = read_results(&path)?;
            if rows.is_empty() {
                return Err(Error::Config(format!("{} has no rows", path.display())));
            }
            let cells = aggregate(&rows);
            write_summary(&out, &cells)?;
            println!("{} cells from {} rows -> {}", cells.len(), rows.len(), out.display());
            Ok(0)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn collect(
    env: EnvArg,
    tier: TeacherTier,
    target: Option<f64>,
    episodes: u64,
    seed: u64,
    deterministic: bool,
    out: &Path,
    force: bool,
) -> policy_finetune::Result<u8> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("refusing to write an empty dataset".into()));
    }
    if out.exists() && !force {
        return Err(Error::InvalidArgument(format!("{} exists; pass --force to overwrite", out.display())));
    }
    let env_cfg = env.config();
    let teacher = make_teacher(
        &env_cfg,
        tier,
        target.unwrap_or(tier.default_success()),
        &CalibrationOptions::default(),
    )?;
    let mut e = env_cfg.build()?;
    let data = OfflineDataset::collect(&mut e, &teacher, tier.name(), episodes as usize, deterministic, seed)?;
    data.save(out)?;
    println!(
        "{} episodes ({} transitions, success {:.3}, teacher epsilon {:.4}) -> {}",
        data.len(),
        data.n_transitions(),
        data.success_rate(),
        teacher.epsilon(),
        out.display()
    );
    Ok(0)
}

fn load_config(path: &Path) -> policy_finetune::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

fn run(
    config: &Path,
    results: Option<PathBuf>,
    logs_dir: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
) -> policy_finetune::Result<u8> {
    let cfg = load_config(config)?;
    if let Some(d) = &cfg.dataset {
        if !d.exists() {
            return Err(Error::MissingDataset(d.clone()));
        }
    }
    let results = results.unwrap_or_else(|| default_results_dir().join("results.csv"));
    let logs_dir = logs_dir.unwrap_or_else(|| results.parent().unwrap_or(Path::new(".")).join("logs"));
    let out = policy_finetune::trainer::train(&cfg)?;
    let row = ResultRow::from_outcome(&cfg, &out)?;
    std::fs::create_dir_all(&logs_dir)?;
    write_log(&logs_dir.join(log_file_name(&cfg)?), &out.log)?;
    append_result(&results, &row)?;
    if let Some(path) = checkpoint {
        std::fs::write(path, &out.checkpoint)?;
    }
    println!(
        "{} budget {} ({} offline / {} online): success {:.3} ± {:.3} after {} gradient steps",
        row.method,
        row.budget,
        row.episodes_offline_used,
        row.episodes_online_used,
        row.success_rate,
        row.stderr,
        row.gradient_steps
    );
    Ok(0)
}

fn sweep(spec_path: &Path, dir: PathBuf, jobs: usize, dry_run: bool) -> policy_finetune::Result<u8> {
    let spec = SweepSpec::load(spec_path)?;
    let opts = SweepOptions::in_dir(&dir);
    let (pending, skipped) = pending_cells(spec.cells()?, &opts.results)?;
    if dry_run {
        for c in &pending {
            println!("{}", cell_key(c)?);
        }
        println!("{} pending, {skipped} already done", pending.len());
        return Ok(0);
    }
    eprintln!("{} cells pending, {skipped} already done", pending.len());
    let cells = prepare_cells(&pending, &DatasetCache::new(&opts.data_dir))?;
    let logs = opts.logs_dir.clone().expect("sweep writes logs");
    let mut failed: Vec<String> = Vec::new();
    if jobs <= 1 {
        for (i, cfg) in cells.iter().enumerate() {
            let key = cell_key(cfg)?;
            match run_cell(cfg, &opts.results, Some(&logs)) {
                Ok(row) => eprintln!("[{}/{}] {key}: {:.3}", i + 1, cells.len(), row.success_rate),
                Err(e) => {
                    eprintln!("[{}/{}] {key}: FAILED {e}", i + 1, cells.len());
                    failed.push(format!("{key}: {e}"));
                }
            }
        }
    } else {
        failed = sweep_parallel(&cells, &opts, &logs, jobs)?;
    }
    if failed.is_empty() {
        println!("sweep complete: {} run, {skipped} skipped", cells.len());
        Ok(0)
    } else {
        eprintln!("{} of {} cells failed:", failed.len(), cells.len());
        for f in &failed {
            eprintln!("  {f}");
        }
        Ok(EXIT_PARTIAL)
    }
}

fn sweep_parallel(
    cells: &[RunConfig],
    opts: &SweepOptions,
    logs: &Path,
    jobs: usize,
) -> policy_finetune::Result<Vec<String>> {
    let exe = std::env::current_exe()?;
    let cell_dir = opts.results.parent().unwrap_or(Path::new(".")).join("cells");
    std::fs::create_dir_all(&cell_dir)?;
    let mut queue = cells.iter().collect::<Vec<_>>().into_iter();
    let mut running: Vec<(String, Child)> = Vec::new();
    let mut failed = Vec::new();
    loop {
        while running.len() < jobs {
            let Some(cfg) = queue.next() else { break };
            let key = cell_key(cfg)?;
            let path = cell_dir.join(log_file_name(cfg)?.replace(".csv", ".toml"));
            std::fs::write(&path, cfg.to_toml()?)?;
            let child = Command::new(&exe)
                .arg("run")
                .arg(&path)
                .arg("--results")
                .arg(&opts.results)
                .arg("--logs-dir")
                .arg(logs)
                .stdout(std::process::Stdio::null())
                .spawn()?;
            running.push((key, child));
        }
        if running.is_empty() {
            break;
        }
        let (key, mut child) = running.remove(0);
        let status = child.wait()?;
        if status.success() {
            eprintln!("{key}: done");
        } else {
            eprintln!("{key}: FAILED ({status})");
            failed.push(format!("{key}: {status}"));
        }
    }
    Ok(failed)
}

fn eval(path: &Path, env: EnvArg, episodes: usize, seed: u64, stochastic: bool) -> policy_finetune::Result<u8> {
    let bytes = std::fs::read(path)?;
    let policy = Checkpoint::from_bytes(&bytes)?.into_policy()?;
    let mut e = env.config().build()?;
    let selection = if stochastic {
        ActionSelection::Sample
    } else {
        ActionSelection::Mode
    };
    let mut resets = RandomStream::new(seed, policy_finetune::domain::stream_ids::EVAL_BASE);
    let mut actions = RandomStream::new(seed, policy_finetune::domain::stream_ids::POLICY_ACTIONS);
    let report = evaluate_with(&mut e, &policy, episodes, selection, &mut resets, &mut actions)?;
    println!(
        "{} success {:.3} ± {:.3} over {} episodes",
        if stochastic { "stochastic" } else { "deterministic" },
        report.success_rate,
        report.stderr,
        report.episodes
    );
    Ok(0)
}
