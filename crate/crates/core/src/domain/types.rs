use serde::{Deserialize, Serialize};

/// An environment observation: either a discrete state index or a fixed-length
/// feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    Index(usize),
    Features(Vec<f64>),
}

impl Observation {
    pub fn index(&self) -> Option<usize> {
        match self {
            Observation::Index(i) => Some(*i),
            Observation::Features(_) => None,
        }
    }

    pub fn features(&self) -> Option<&[f64]> {
        match self {
            Observation::Index(_) => None,
            Observation::Features(f) => Some(f),
        }
    }
}

/// An action: a discrete index or a continuous vector with every component in
/// `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    /// Builds a continuous action, clipping each component to `[-1, 1]`.
    pub fn continuous_clipped(values: impl IntoIterator<Item = f64>) -> Self {
        Action::Continuous(values.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
    }

    pub fn discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn vector(&self) -> Option<&[f64]> {
        match self {
            Action::Discrete(_) => None,
            Action::Continuous(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_state: Observation,
    /// True only when the episode ended by success; horizon truncation keeps
    /// this false so the critic still bootstraps.
    pub terminal: bool,
    /// `log pi_b(a|s)` of the policy that produced the action.
    pub behavior_log_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpisodeSource {
    TeacherOffline,
    StudentOnline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub source: EpisodeSource,
    pub success: bool,
    pub seed: u64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Undiscounted sum of the stored rewards.
    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}
