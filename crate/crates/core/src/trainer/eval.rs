use serde::{Deserialize, Serialize};

use crate::domain::{ActionSelection, EpisodeSource, RandomStream, StochasticPolicy};
use crate::envs::{run_episode, Environment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub success_rate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub stderr: f64,
    pub episodes: usize,
    pub successes: usize,
    pub deterministic: bool,
    pub outcomes: Vec<bool>,
}

impl EvalReport {
    pub fn from_outcomes(outcomes: Vec<bool>, deterministic: bool) -> Self {
        let episodes = outcomes.len();
        let successes = outcomes.iter().filter(|s| **s).count();
        let p = if episodes == 0 {
            0.0
        } else {
            successes as f64 / episodes as f64
        };
        Self {
            success_rate: p,
            stderr: if episodes == 0 {
                0.0
            } else {
                (p * (1.0 - p) / episodes as f64).sqrt()
            },
            episodes,
            successes,
            deterministic,
            outcomes,
        }
    }
}

/// Rolls out the mode action of `policy` for `n` episodes with resets from
/// `stream`. Evaluation episodes are never charged to a budget.
pub fn evaluate<E, P>(env: &mut E, policy: &P, n: usize, stream: &mut RandomStream) -> Result<EvalReport>
where
    E: Environment + ?Sized,
    P: StochasticPolicy + ?Sized,
{
    evaluate_with(env, policy, n, ActionSelection::Mode, stream, &mut RandomStream::new(stream.seed(), u64::MAX))
}

/// [`evaluate`] with an explicit action selection.
pub fn evaluate_with<E, P>(
    env: &mut E,
    policy: &P,
    n: usize,
    selection: ActionSelection,
    resets: &mut RandomStream,
    actions: &mut RandomStream,
) -> Result<EvalReport>
where
    E: Environment + ?Sized,
    P: StochasticPolicy + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidArgument("evaluation needs at least one episode".into()));
    }
    let outcomes = (0..n)
        .map(|_| run_episode(env, policy, selection, resets, actions, EpisodeSource::StudentOnline).map(|e| e.success))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_outcomes(outcomes, selection == ActionSelection::Mode))
}
