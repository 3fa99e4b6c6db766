//! Shared domain types, the episode budget ledger and seeded random streams.

mod ledger;
mod policy;
mod rng;
mod types;

pub use ledger::BudgetLedger;
pub use policy::{ActionSelection, StochasticPolicy};
pub use rng::{stream_ids, RandomStream};
pub use types::{Action, Episode, EpisodeSource, Observation, Transition};
