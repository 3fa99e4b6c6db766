//! Offline datasets, the replay buffer, mixed-batch sampling and the
//! offline-to-online proportion schedule.

mod dataset;
mod replay;
mod sampler;
mod schedule;

pub use dataset::{DatasetMeta, OfflineDataset, DATASET_MAGIC, DATASET_VERSION};
pub use replay::ReplayBuffer;
pub use sampler::{sample_batch, BatchRatio, MixedBatch};
pub use schedule::AwacSchedule;
