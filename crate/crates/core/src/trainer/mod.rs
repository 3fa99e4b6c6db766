//! Training loop, method registry and run configuration.

mod config;
mod eval;
mod methods;
mod train;

pub use config::{Hyperparameters, RunConfig};
pub use eval::{evaluate, evaluate_with, EvalReport};
pub use methods::{
    build_method, build_method_for, DataSources, MethodConfig, MethodName, DEFAULT_CRR_ETA, DEFAULT_MPO_EPSILON,
    DEFAULT_PRIOR_SAMPLES, DEFAULT_RCRR_BETA, DEFAULT_RMPO_BETA, DEFAULT_TRUST_REGION, DEFAULT_WEIGHT_CLIP,
};
pub use train::{
    build_policy, build_q, prepare_dataset, read_log, resolve_teacher, train, train_with, write_log, LogRow,
    TrainOutcome, TrainStats,
};
