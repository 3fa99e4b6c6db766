use super::{Action, Observation, RandomStream};

/// Anything that defines a state-conditional action distribution: students,
/// teachers and fixed test policies.
pub trait StochasticPolicy {
    fn sample(&self, obs: &Observation, rng: &mut RandomStream) -> Action;
    /// The most likely action (argmax for discrete, mean for Gaussian).
    fn mode(&self, obs: &Observation) -> Action;
    fn log_density(&self, obs: &Observation, action: &Action) -> f64;
    /// Full action distribution for discrete action spaces.
    fn action_probs(&self, _obs: &Observation) -> Option<Vec<f64>> {
        None
    }
}

/// How a rollout picks actions from a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSelection {
    Sample,
    Mode,
}

impl ActionSelection {
    pub fn select<P: StochasticPolicy + ?Sized>(
        self,
        policy: &P,
        obs: &Observation,
        rng: &mut RandomStream,
    ) -> Action {
        match self {
            ActionSelection::Sample => policy.sample(obs, rng),
            ActionSelection::Mode => policy.mode(obs),
        }
    }
}
