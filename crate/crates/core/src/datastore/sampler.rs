use serde::{Deserialize, Serialize};

use super::{OfflineDataset, ReplayBuffer};
use crate::domain::{RandomStream, Transition};
use crate::{Error, Result};

/// Per-batch split between the offline dataset and the replay buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BatchRatio {
    pub offline: usize,
    pub online: usize,
}

impl BatchRatio {
    pub const fn new(offline: usize, online: usize) -> Self {
        Self { offline, online }
    }

    pub fn total(&self) -> usize {
        self.offline + self.online
    }

    /// Split of `total` with `round(fraction * total)` offline samples.
    pub fn from_fraction(total: usize, fraction: f64) -> Self {
        let offline = (fraction.clamp(0.0, 1.0) * total as f64).round() as usize;
        Self::new(offline, total - offline)
    }
}

impl std::fmt::Display for BatchRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.offline, self.online)
    }
}

impl std::str::FromStr for BatchRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("batch ratio `{s}` is not `offline:online`")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("batch ratio `{s}`")))
        };
        Ok(Self::new(parse(a)?, parse(b)?))
    }
}

/// A sampled batch; dataset items come first.
#[derive(Debug, Clone)]
pub struct MixedBatch<'a> {
    pub transitions: Vec<&'a Transition>,
    pub from_dataset: usize,
    pub from_replay: usize,
}

/// Uniform with-replacement sampling inside each store.
pub fn sample_batch<'a>(
    ratio: BatchRatio,
    dataset: Option<&'a OfflineDataset>,
    replay: Option<&'a ReplayBuffer>,
    rng: &mut RandomStream,
) -> Result<MixedBatch<'a>> {
    let mut transitions = Vec::with_capacity(ratio.total());
    if ratio.offline > 0 {
        let d = dataset
            .filter(|d| d.n_transitions() > 0)
            .ok_or(Error::EmptyStore("dataset"))?;
        for _ in 0..ratio.offline {
            transitions.push(d.transition(rng.below(d.n_transitions())));
        }
    }
    if ratio.online > 0 {
        let r = replay.filter(|r| !r.is_empty()).ok_or(Error::EmptyStore("replay"))?;
        for _ in 0..ratio.online {
            transitions.push(r.sample(rng));
        }
    }
    Ok(MixedBatch {
        transitions,
        from_dataset: ratio.offline,
        from_replay: ratio.online,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_parsing() {
        assert_eq!("32:32".parse::<BatchRatio>().unwrap(), BatchRatio::new(32, 32));
        assert!("32-32".parse::<BatchRatio>().is_err());
        assert_eq!(BatchRatio::new(48, 16).to_string(), "48:16");
        assert_eq!(BatchRatio::from_fraction(64, 0.2), BatchRatio::new(13, 51));
    }

    #[test]
    fn empty_store_errors() {
        let mut rng = RandomStream::new(0, 0);
        assert!(matches!(
            sample_batch(BatchRatio::new(64, 0), None, None, &mut rng),
            Err(Error::EmptyStore("dataset"))
        ));
        let r = ReplayBuffer::new(4);
        assert!(matches!(
            sample_batch(BatchRatio::new(0, 64), None, Some(&r), &mut rng),
            Err(Error::EmptyStore("replay"))
        ));
    }
}
