//! Sparse-reward stacking surrogates, exact value iteration for the grid task,
//! reward shaping and calibrated suboptimal teachers.

mod grid;
mod point;
mod rollout;
mod shaped;
mod solve;
mod teacher;

use serde::{Deserialize, Serialize};

use crate::domain::{Action, Observation, RandomStream};
use crate::Result;

pub use grid::{
    GridAction, GridLayout, GridObservation, GridStackEnv, GridState, LayoutMode, RedSlot,
    GRID_CELLS, GRID_FEATURE_DIM, GRID_HORIZON, GRID_LOCAL_STATES, GRID_N_ACTIONS, GRID_SIDE,
    GRID_STATES,
};
pub use point::{
    PointController, PointStackEnv, POINT_ACTION_DIM, POINT_FEATURE_DIM, POINT_HORIZON,
    POINT_MAX_STEP, POINT_SUCCESS_RADIUS,
};
pub use rollout::{run_episode, success_rate};
pub use shaped::{ShapedRewardWrapper, ShapingWeights};
pub use solve::{solve_optimal, GridOracle, GridSolution};
pub use teacher::{make_teacher, measure_teacher, BaseController, CalibrationOptions, TeacherPolicy, TeacherTier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationSpace {
    Discrete { n: usize },
    Features { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    Discrete { n: usize },
    Continuous { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvSpec {
    pub id: &'static str,
    pub observation: ObservationSpace,
    pub action: ActionSpace,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    /// Episode ended by success.
    pub terminal: bool,
    /// Episode ended by the horizon cap.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Environment {
    fn spec(&self) -> EnvSpec;
    fn reset(&mut self, stream: &mut RandomStream) -> Observation;
    fn step(&mut self, action: &Action) -> Result<StepOutcome>;
    /// `(agent -> object, object -> target)` distances used for shaping.
    fn shaping_distances(&self) -> (f64, f64);
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn spec(&self) -> EnvSpec {
        (**self).spec()
    }

    fn reset(&mut self, stream: &mut RandomStream) -> Observation {
        (**self).reset(stream)
    }

    fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        (**self).step(action)
    }

    fn shaping_distances(&self) -> (f64, f64) {
        (**self).shaping_distances()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Grid,
    Point,
}

impl EnvKind {
    pub fn id(self) -> &'static str {
        match self {
            EnvKind::Grid => "grid",
            EnvKind::Point => "point",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(EnvKind::Grid),
            "point" => Ok(EnvKind::Point),
            other => Err(crate::Error::Config(format!("unknown env `{other}`"))),
        }
    }
}

/// Environment construction parameters as they appear in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub grid_observation: GridObservation,
    /// `None` draws blue and green per episode; `Some([blue, green])` fixes them.
    pub fixed_targets: Option<[usize; 2]>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            kind: EnvKind::Grid,
            grid_observation: GridObservation::Index,
            fixed_targets: None,
        }
    }
}

impl EnvConfig {
    pub fn grid() -> Self {
        Self::default()
    }

    pub fn point() -> Self {
        Self {
            kind: EnvKind::Point,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment>> {
        Ok(match self.kind {
            EnvKind::Grid => {
                let mode = match self.fixed_targets {
                    None => LayoutMode::Random,
                    Some([blue, green]) => LayoutMode::fixed(blue, green)?,
                };
                Box::new(GridStackEnv::new(mode, self.grid_observation))
            }
            EnvKind::Point => Box::new(PointStackEnv::new()),
        })
    }

    pub fn build_shaped(&self, weights: ShapingWeights) -> Result<Box<dyn Environment>> {
        Ok(Box::new(ShapedRewardWrapper::new(self.build()?, weights)))
    }
}
