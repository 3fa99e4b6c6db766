//! Sweep grids, the shared dataset cache and the results CSV behind
//! `pfbench`.

mod datasets;
mod results;
mod sweep;

pub use datasets::{content_hash, DatasetCache};
pub use results::{
    aggregate, append_result, cell_key, read_results, write_summary, CellSummary, ResultRow, RESULT_COLUMNS,
};
pub use sweep::{
    log_file_name, pending_cells, prepare_cells, run_cell, run_sweep, SweepOptions, SweepOutcome, SweepSpec,
};

/// Environment variable naming the default results directory.
pub const RESULTS_DIR_ENV: &str = "PFBENCH_RESULTS_DIR";

/// `$PFBENCH_RESULTS_DIR`, or `results` in the working directory.
pub fn default_results_dir() -> std::path::PathBuf {
    std::env::var_os(RESULTS_DIR_ENV).map_or_else(|| "results".into(), Into::into)
}
