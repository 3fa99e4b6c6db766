//! Teacher-guided policy finetuning.
//!
//! Every learner in this crate is an instance of one exponential-weighted
//! policy-improvement objective: actions drawn from a *prior* are reweighted
//! by an exponentiated critic value and then fitted by weighted maximum
//! likelihood. Changing the data sources, the prior and the weighting rule
//! recovers behavioral cloning, CRR, AWAC, DAgger, MPO and the two
//! teacher-relabeling variants R-MPO and R-CRR.
//!
//! The crate is organized bottom-up:
//!
//! - [`domain`]: observations, actions, transitions, the budget ledger and
//!   seeded random streams.
//! - [`envs`]: two sparse-reward stacking surrogates, value iteration and
//!   calibrated suboptimal teachers.
//! - [`approx`]: tabular and MLP policies and Q-functions with hand-written
//!   gradients, plus an Adam optimizer and checkpoint files.
//! - [`critic`]: TD learning with target networks and a categorical
//!   distributional head.
//! - [`actor`]: priors, weighting rules, the temperature dual and the
//!   improvement step.
//! - [`datastore`]: offline datasets, replay, mixed batches and the AWAC
//!   schedule.
//! - [`trainer`]: the method registry, the budgeted training loop and
//!   evaluation.
//! - [`bench`]: run configs, sweeps and the results CSV used by `pfbench`.

pub mod actor;
pub mod approx;
pub mod bench;
pub mod critic;
pub mod datastore;
pub mod domain;
pub mod envs;
mod error;
pub mod trainer;

pub use error::{Error, Result};
