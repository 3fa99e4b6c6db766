use serde::{Deserialize, Serialize};

use super::{ActionSpace, EnvSpec, Environment, ObservationSpace, StepOutcome};
use crate::domain::{Action, Observation, RandomStream};
use crate::{Error, Result};

pub const GRID_SIDE: usize = 5;
pub const GRID_CELLS: usize = GRID_SIDE * GRID_SIDE;
pub const GRID_HORIZON: usize = 50;
pub const GRID_N_ACTIONS: usize = 6;
/// Red-block slots: one per cell plus "carried".
const RED_SLOTS: usize = GRID_CELLS + 1;
/// States for one `(blue, green)` layout.
pub const GRID_LOCAL_STATES: usize = GRID_CELLS * RED_SLOTS;
/// Size of the global state index `(blue, agent, red slot)`.
pub const GRID_STATES: usize = GRID_CELLS * GRID_LOCAL_STATES;
/// One-hot agent, red, blue and green cells plus a carrying flag.
pub const GRID_FEATURE_DIM: usize = 4 * GRID_CELLS + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum GridAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Pickup = 4,
    Drop = 5,
}

impl GridAction {
    pub const ALL: [GridAction; GRID_N_ACTIONS] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
        GridAction::Pickup,
        GridAction::Drop,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RedSlot {
    OnCell(usize),
    Carried,
}

impl RedSlot {
    fn index(self) -> usize {
        match self {
            RedSlot::OnCell(c) => c,
            RedSlot::Carried => GRID_CELLS,
        }
    }

    fn from_index(i: usize) -> Self {
        if i == GRID_CELLS {
            RedSlot::Carried
        } else {
            RedSlot::OnCell(i)
        }
    }
}

/// The dynamic part of a grid state. Green never affects dynamics or reward,
/// so it is not part of the Markov state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridState {
    pub blue: usize,
    pub agent: usize,
    pub red: RedSlot,
}

impl GridState {
    /// Index within one layout, `agent * 26 + red slot`.
    pub fn local_index(&self) -> usize {
        self.agent * RED_SLOTS + self.red.index()
    }

    pub fn from_local(blue: usize, local: usize) -> Self {
        Self {
            blue,
            agent: local / RED_SLOTS,
            red: RedSlot::from_index(local % RED_SLOTS),
        }
    }

    pub fn global_index(&self) -> usize {
        self.blue * GRID_LOCAL_STATES + self.local_index()
    }

    pub fn from_global(index: usize) -> Self {
        Self::from_local(index / GRID_LOCAL_STATES, index % GRID_LOCAL_STATES)
    }

    /// A state can occur before success unless red rests on blue.
    pub fn is_valid(&self) -> bool {
        self.red != RedSlot::OnCell(self.blue)
    }

    /// Deterministic dynamics shared by the environment and value iteration.
    /// Returns the successor and whether the action completed the stack.
    pub fn apply(&self, action: GridAction) -> (GridState, bool) {
        let mut next = *self;
        let (row, col) = (self.agent / GRID_SIDE, self.agent % GRID_SIDE);
        match action {
            GridAction::Up if row > 0 => next.agent -= GRID_SIDE,
            GridAction::Down if row + 1 < GRID_SIDE => next.agent += GRID_SIDE,
            GridAction::Left if col > 0 => next.agent -= 1,
            GridAction::Right if col + 1 < GRID_SIDE => next.agent += 1,
            GridAction::Pickup if self.red == RedSlot::OnCell(self.agent) => {
                next.red = RedSlot::Carried;
            }
            GridAction::Drop if self.red == RedSlot::Carried => {
                next.red = RedSlot::OnCell(self.agent);
                return (next, self.agent == self.blue);
            }
            _ => {}
        }
        (next, false)
    }

    fn red_cell(&self) -> usize {
        match self.red {
            RedSlot::OnCell(c) => c,
            RedSlot::Carried => self.agent,
        }
    }
}

fn manhattan(a: usize, b: usize) -> f64 {
    let (ar, ac) = ((a / GRID_SIDE) as i64, (a % GRID_SIDE) as i64);
    let (br, bc) = ((b / GRID_SIDE) as i64, (b % GRID_SIDE) as i64);
    ((ar - br).abs() + (ac - bc).abs()) as f64
}

/// Initial placement of the four objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridLayout {
    pub agent: usize,
    pub red: usize,
    pub blue: usize,
    pub green: usize,
}

impl GridLayout {
    /// Uniform over placements of four distinct cells.
    pub fn random(stream: &mut RandomStream) -> Self {
        let cells = distinct_cells(stream, 4, &[]);
        Self {
            agent: cells[0],
            red: cells[1],
            blue: cells[2],
            green: cells[3],
        }
    }
}

fn distinct_cells(stream: &mut RandomStream, k: usize, exclude: &[usize]) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..GRID_CELLS).filter(|c| !exclude.contains(c)).collect();
    // Partial Fisher-Yates.
    for i in 0..k {
        let j = i + stream.below(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutMode {
    /// Blue and green are redrawn on every reset.
    Random,
    /// Blue and green stay put; agent and red are redrawn.
    FixedTargets { blue: usize, green: usize },
}

impl LayoutMode {
    pub fn fixed(blue: usize, green: usize) -> Result<Self> {
        if blue >= GRID_CELLS || green >= GRID_CELLS || blue == green {
            return Err(Error::InvalidArgument(format!(
                "fixed targets must be distinct cells below {GRID_CELLS}, got blue={blue} green={green}"
            )));
        }
        Ok(LayoutMode::FixedTargets { blue, green })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridObservation {
    /// Global state index `(blue, agent, red slot)` for tabular learners.
    #[default]
    Index,
    /// One-hot feature vector for function approximators.
    Features,
}

/// 5x5 pick-and-place task: carry the red block onto the blue one.
#[derive(Debug, Clone)]
pub struct GridStackEnv {
    mode: LayoutMode,
    obs: GridObservation,
    state: GridState,
    green: usize,
    steps: usize,
    done: bool,
}

impl GridStackEnv {
    pub fn new(mode: LayoutMode, obs: GridObservation) -> Self {
        Self {
            mode,
            obs,
            state: GridState {
                blue: 0,
                agent: 0,
                red: RedSlot::Carried,
            },
            green: 1,
            steps: 0,
            done: true,
        }
    }

    pub fn random() -> Self {
        Self::new(LayoutMode::Random, GridObservation::Index)
    }

    pub fn state(&self) -> GridState {
        self.state
    }

    pub fn green(&self) -> usize {
        self.green
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Starts an episode from an explicit layout.
    pub fn reset_to(&mut self, layout: GridLayout) -> Observation {
        self.state = GridState {
            blue: layout.blue,
            agent: layout.agent,
            red: RedSlot::OnCell(layout.red),
        };
        self.green = layout.green;
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        match self.obs {
            GridObservation::Index => Observation::Index(self.state.global_index()),
            GridObservation::Features => {
                Observation::Features(Self::features(&self.state, self.green))
            }
        }
    }

    pub fn features(state: &GridState, green: usize) -> Vec<f64> {
        let mut f = vec![0.0; GRID_FEATURE_DIM];
        f[state.agent] = 1.0;
        match state.red {
            RedSlot::OnCell(c) => f[GRID_CELLS + c] = 1.0,
            RedSlot::Carried => f[4 * GRID_CELLS] = 1.0,
        }
        f[2 * GRID_CELLS + state.blue] = 1.0;
        f[3 * GRID_CELLS + green] = 1.0;
        f
    }

    /// Recovers the Markov state from either observation form.
    pub fn decode(obs: &Observation) -> Option<GridState> {
        match obs {
            Observation::Index(i) if *i < GRID_STATES => Some(GridState::from_global(*i)),
            Observation::Index(_) => None,
            Observation::Features(f) if f.len() == GRID_FEATURE_DIM => {
                let hot = |range: std::ops::Range<usize>| {
                    range.clone().find(|&i| f[i] > 0.5).map(|i| i - range.start)
                };
                let agent = hot(0..GRID_CELLS)?;
                let blue = hot(2 * GRID_CELLS..3 * GRID_CELLS)?;
                let red = if f[4 * GRID_CELLS] > 0.5 {
                    RedSlot::Carried
                } else {
                    RedSlot::OnCell(hot(GRID_CELLS..2 * GRID_CELLS)?)
                };
                Some(GridState { blue, agent, red })
            }
            Observation::Features(_) => None,
        }
    }
}

impl Environment for GridStackEnv {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            id: "grid",
            observation: match self.obs {
                GridObservation::Index => ObservationSpace::Discrete { n: GRID_STATES },
                GridObservation::Features => ObservationSpace::Features {
                    dim: GRID_FEATURE_DIM,
                },
            },
            action: ActionSpace::Discrete { n: GRID_N_ACTIONS },
            horizon: GRID_HORIZON,
        }
    }

    fn reset(&mut self, stream: &mut RandomStream) -> Observation {
        let layout = match self.mode {
            LayoutMode::Random => GridLayout::random(stream),
            LayoutMode::FixedTargets { blue, green } => {
                let cells = distinct_cells(stream, 2, &[blue, green]);
                GridLayout {
                    agent: cells[0],
                    red: cells[1],
                    blue,
                    green,
                }
            }
        };
        self.reset_to(layout)
    }

    fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::StepAfterTerminal);
        }
        let a = action
            .discrete()
            .and_then(GridAction::from_index)
            .ok_or_else(|| Error::InvalidAction(format!("{action:?} for grid task")))?;
        let (next, success) = self.state.apply(a);
        self.state = next;
        self.steps += 1;
        let truncated = !success && self.steps >= GRID_HORIZON;
        self.done = success || truncated;
        Ok(StepOutcome {
            observation: self.observe(),
            reward: if success { 1.0 } else { 0.0 },
            terminal: success,
            truncated,
        })
    }

    fn shaping_distances(&self) -> (f64, f64) {
        let to_object = match self.state.red {
            RedSlot::OnCell(c) => manhattan(self.state.agent, c),
            RedSlot::Carried => 0.0,
        };
        (to_object, manhattan(self.state.red_cell(), self.state.blue))
    }
}
