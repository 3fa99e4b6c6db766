use super::{ActionSpace, EnvSpec, Environment, ObservationSpace, StepOutcome};
use crate::domain::{Action, Observation, RandomStream};
use crate::{Error, Result};

pub const POINT_HORIZON: usize = 100;
pub const POINT_MAX_STEP: f64 = 0.1;
pub const POINT_SUCCESS_RADIUS: f64 = 0.05;
pub const POINT_ACTION_DIM: usize = 3;
/// `[agent xy, block xy, target xy, grip closed, holding]`.
pub const POINT_FEATURE_DIM: usize = 8;
const GRASP_RADIUS: f64 = 0.05;
/// Minimum pairwise distance between agent, block and target at reset.
const MIN_SEPARATION: f64 = 0.15;

type Point = [f64; 2];

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Continuous pick-and-place in the unit square. Actions are
/// `(dx, dy, grip logit)` in `[-1, 1]^3`; the move is scaled by 0.1 and a
/// positive grip logit closes the gripper.
#[derive(Debug, Clone)]
pub struct PointStackEnv {
    agent: Point,
    block: Point,
    target: Point,
    grip_closed: bool,
    holding: bool,
    steps: usize,
    done: bool,
}

impl Default for PointStackEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl PointStackEnv {
    pub fn new() -> Self {
        Self {
            agent: [0.0; 2],
            block: [0.5; 2],
            target: [1.0; 2],
            grip_closed: false,
            holding: false,
            steps: 0,
            done: true,
        }
    }

    pub fn agent(&self) -> Point {
        self.agent
    }

    pub fn block(&self) -> Point {
        self.block
    }

    pub fn target(&self) -> Point {
        self.target
    }

    pub fn holding(&self) -> bool {
        self.holding
    }

    pub fn reset_to(&mut self, agent: Point, block: Point, target: Point) -> Observation {
        self.agent = agent;
        self.block = block;
        self.target = target;
        self.grip_closed = false;
        self.holding = false;
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        Observation::Features(vec![
            self.agent[0],
            self.agent[1],
            self.block[0],
            self.block[1],
            self.target[0],
            self.target[1],
            if self.grip_closed { 1.0 } else { 0.0 },
            if self.holding { 1.0 } else { 0.0 },
        ])
    }
}

impl Environment for PointStackEnv {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            id: "point",
            observation: ObservationSpace::Features {
                dim: POINT_FEATURE_DIM,
            },
            action: ActionSpace::Continuous {
                dim: POINT_ACTION_DIM,
            },
            horizon: POINT_HORIZON,
        }
    }

    fn reset(&mut self, stream: &mut RandomStream) -> Observation {
        // Rejection sampling keeps the three points apart.
        loop {
            let mut p = || [stream.uniform(), stream.uniform()];
            let (agent, block, target) = (p(), p(), p());
            if dist(agent, block) >= MIN_SEPARATION
                && dist(agent, target) >= MIN_SEPARATION
                && dist(block, target) >= MIN_SEPARATION
            {
                return self.reset_to(agent, block, target);
            }
        }
    }

    fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::StepAfterTerminal);
        }
        let v = match action.vector() {
            Some(v) if v.len() == POINT_ACTION_DIM && v.iter().all(|x| x.is_finite()) => v,
            _ => {
                return Err(Error::InvalidAction(format!(
                    "{action:?} for point task"
                )))
            }
        };
        for d in 0..2 {
            self.agent[d] = (self.agent[d] + POINT_MAX_STEP * v[d].clamp(-1.0, 1.0)).clamp(0.0, 1.0);
        }
        let close = v[2] > 0.0;
        if close && !self.grip_closed && dist(self.agent, self.block) <= GRASP_RADIUS {
            self.holding = true;
        }
        if self.holding {
            self.block = self.agent;
        }
        if !close {
            self.holding = false;
        }
        self.grip_closed = close;
        self.steps += 1;
        let success = !self.holding && dist(self.block, self.target) <= POINT_SUCCESS_RADIUS;
        let truncated = !success && self.steps >= POINT_HORIZON;
        self.done = success || truncated;
        Ok(StepOutcome {
            observation: self.observe(),
            reward: if success { 1.0 } else { 0.0 },
            terminal: success,
            truncated,
        })
    }

    fn shaping_distances(&self) -> (f64, f64) {
        let to_block = if self.holding {
            0.0
        } else {
            dist(self.agent, self.block)
        };
        (to_block, dist(self.block, self.target))
    }
}

/// Proportional go-to-block / go-to-target controller. Succeeds on every
/// reset well within the horizon.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointController;

impl PointController {
    const ARRIVE: f64 = 0.02;

    /// Noise-free control action for a point-task observation.
    pub fn action(&self, obs: &Observation) -> Vec<f64> {
        let f = match obs.features() {
            Some(f) if f.len() == POINT_FEATURE_DIM => f,
            _ => return vec![0.0; POINT_ACTION_DIM],
        };
        let agent = [f[0], f[1]];
        let block = [f[2], f[3]];
        let target = [f[4], f[5]];
        let holding = f[7] > 0.5;
        let toward = |goal: Point| {
            [
                ((goal[0] - agent[0]) / POINT_MAX_STEP).clamp(-1.0, 1.0),
                ((goal[1] - agent[1]) / POINT_MAX_STEP).clamp(-1.0, 1.0),
            ]
        };
        if !holding {
            if dist(agent, block) > Self::ARRIVE {
                let m = toward(block);
                vec![m[0], m[1], -1.0]
            } else {
                vec![0.0, 0.0, 1.0]
            }
        } else if dist(block, target) > Self::ARRIVE {
            let m = toward(target);
            vec![m[0], m[1], 1.0]
        } else {
            vec![0.0, 0.0, -1.0]
        }
    }
}
