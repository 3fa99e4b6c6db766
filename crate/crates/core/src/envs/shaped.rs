use serde::{Deserialize, Serialize};

use super::{EnvSpec, Environment, StepOutcome};
use crate::domain::{Action, Observation, RandomStream};
use crate::Result;

/// Coefficients for distance-reduction shaping on top of the sparse reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingWeights {
    pub agent_to_object: f64,
    pub object_to_target: f64,
    pub success_bonus: f64,
}

impl Default for ShapingWeights {
    fn default() -> Self {
        Self {
            agent_to_object: 0.1,
            object_to_target: 0.1,
            success_bonus: 1.0,
        }
    }
}

impl ShapingWeights {
    pub const ZERO: ShapingWeights = ShapingWeights {
        agent_to_object: 0.0,
        object_to_target: 0.0,
        success_bonus: 0.0,
    };
}

/// Adds `w1 * (agent->object reduction) + w2 * (object->target reduction) +
/// w3 * sparse` to the inner reward. Success and termination are untouched.
#[derive(Debug, Clone)]
pub struct ShapedRewardWrapper<E> {
    inner: E,
    weights: ShapingWeights,
}

impl<E: Environment> ShapedRewardWrapper<E> {
    pub fn new(inner: E, weights: ShapingWeights) -> Self {
        Self { inner, weights }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Environment> Environment for ShapedRewardWrapper<E> {
    fn spec(&self) -> EnvSpec {
        self.inner.spec()
    }

    fn reset(&mut self, stream: &mut RandomStream) -> Observation {
        self.inner.reset(stream)
    }

    fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let (obj_before, tgt_before) = self.inner.shaping_distances();
        let mut out = self.inner.step(action)?;
        let (obj_after, tgt_after) = self.inner.shaping_distances();
        let w = self.weights;
        let sparse = out.reward;
        out.reward = sparse
            + w.agent_to_object * (obj_before - obj_after)
            + w.object_to_target * (tgt_before - tgt_after)
            + w.success_bonus * sparse;
        Ok(out)
    }

    fn shaping_distances(&self) -> (f64, f64) {
        self.inner.shaping_distances()
    }
}
