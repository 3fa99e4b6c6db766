use std::sync::OnceLock;

use super::grid::{GridAction, GridLayout, GridState, GRID_CELLS, GRID_LOCAL_STATES, GRID_N_ACTIONS};
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100_000;
const TOLERANCE: f64 = 1e-13;
/// Actions whose Q is within this of the best are treated as tied.
const TIE_EPS: f64 = 1e-12;

/// Exact value iteration result for one layout. Arrays are indexed by
/// [`GridState::local_index`]; invalid states carry zeros.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub blue: usize,
    pub gamma: f64,
    pub values: Vec<f64>,
    pub q: Vec<[f64; GRID_N_ACTIONS]>,
    pub greedy: Vec<usize>,
    pub sweeps: usize,
}

impl GridSolution {
    pub fn value(&self, state: &GridState) -> f64 {
        self.values[state.local_index()]
    }

    pub fn q_values(&self, state: &GridState) -> &[f64; GRID_N_ACTIONS] {
        &self.q[state.local_index()]
    }

    /// Lowest-index maximizer of Q.
    pub fn greedy_action(&self, state: &GridState) -> usize {
        self.greedy[state.local_index()]
    }

    /// All actions within numerical tolerance of the best Q.
    pub fn optimal_actions(&self, state: &GridState) -> Vec<usize> {
        let q = self.q_values(state);
        let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..GRID_N_ACTIONS)
            .filter(|&a| q[a] >= best - TIE_EPS)
            .collect()
    }

    /// Sup-norm Bellman residual `|V - T V|`.
    pub fn bellman_residual(&self) -> f64 {
        let (tv, _) = bellman_backup(self.blue, self.gamma, &self.values);
        tv.iter()
            .zip(&self.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn bellman_backup(blue: usize, gamma: f64, values: &[f64]) -> (Vec<f64>, Vec<[f64; GRID_N_ACTIONS]>) {
    let mut next_v = vec![0.0; GRID_LOCAL_STATES];
    let mut q = vec![[0.0; GRID_N_ACTIONS]; GRID_LOCAL_STATES];
    for local in 0..GRID_LOCAL_STATES {
        let s = GridState::from_local(blue, local);
        if !s.is_valid() {
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        for a in GridAction::ALL {
            let (next, success) = s.apply(a);
            let qa = if success {
                1.0
            } else {
                gamma * values[next.local_index()]
            };
            q[local][a as usize] = qa;
            best = best.max(qa);
        }
        next_v[local] = best;
    }
    (next_v, q)
}

/// Value iteration over the 650-state space of one layout.
///
/// Green never influences the dynamics, so only `layout.blue` matters; the
/// agent and red entries of the layout are ignored.
pub fn solve_optimal(layout: &GridLayout, gamma: f64) -> Result<GridSolution> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1)")));
    }
    let blue = layout.blue;
    if blue >= GRID_CELLS {
        return Err(Error::InvalidArgument(format!("blue cell {blue}")));
    }
    let mut values = vec![0.0; GRID_LOCAL_STATES];
    let mut sweeps = 0;
    let q = loop {
        let (next, q) = bellman_backup(blue, gamma, &values);
        sweeps += 1;
        let delta = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if delta < TOLERANCE || sweeps >= MAX_SWEEPS {
            break q;
        }
    };
    let mut greedy = vec![0; GRID_LOCAL_STATES];
    for local in 0..GRID_LOCAL_STATES {
        let s = GridState::from_local(blue, local);
        if !s.is_valid() {
            continue;
        }
        if values[local] <= 0.0 {
            return Err(Error::UnsolvableLayout(format!(
                "state {s:?} cannot reach the goal"
            )));
        }
        let row = &q[local];
        let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        greedy[local] = (0..GRID_N_ACTIONS)
            .find(|&a| row[a] >= best - TIE_EPS)
            .unwrap_or(0);
    }
    Ok(GridSolution {
        blue,
        gamma,
        values,
        q,
        greedy,
        sweeps,
    })
}

/// Lazily solved optimal policies for every blue position, shared by teachers.
#[derive(Debug)]
pub struct GridOracle {
    gamma: f64,
    solutions: Vec<OnceLock<GridSolution>>,
}

impl GridOracle {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1)")));
        }
        Ok(Self {
            gamma,
            solutions: (0..GRID_CELLS).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn solution(&self, blue: usize) -> &GridSolution {
        self.solutions[blue].get_or_init(|| {
            let layout = GridLayout {
                agent: 0,
                red: 0,
                blue,
                green: 0,
            };
            // gamma is validated in `new` and every layout is solvable.
            solve_optimal(&layout, self.gamma).expect("grid layouts are always solvable")
        })
    }

    pub fn greedy_action(&self, state: &GridState) -> usize {
        self.solution(state.blue).greedy_action(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::grid::RedSlot;

    fn layout(blue: usize) -> GridLayout {
        GridLayout {
            agent: 0,
            red: 1,
            blue,
            green: 2,
        }
    }

    #[test]
    fn success_adjacent_state_has_unit_value() {
        let sol = solve_optimal(&layout(12), 0.98).unwrap();
        let s = GridState {
            blue: 12,
            agent: 12,
            red: RedSlot::Carried,
        };
        assert_eq!(sol.value(&s), 1.0);
        assert_eq!(sol.greedy_action(&s), GridAction::Drop as usize);
    }

    #[test]
    fn fixed_point_residual() {
        for blue in [0, 7, 24] {
            let sol = solve_optimal(&layout(blue), 0.98).unwrap();
            assert!(sol.bellman_residual() < 1e-9);
        }
    }

    #[test]
    fn value_matches_shortest_path() {
        // agent at 0, red at 24, blue at 4: 8 moves + pickup + 4 moves + drop.
        let sol = solve_optimal(&layout(4), 0.9).unwrap();
        let s = GridState {
            blue: 4,
            agent: 0,
            red: RedSlot::OnCell(24),
        };
        let steps = 8 + 1 + 4 + 1;
        assert!((sol.value(&s) - 0.9f64.powi(steps - 1)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(solve_optimal(&layout(0), 1.0).is_err());
        assert!(GridOracle::new(-0.1).is_err());
    }
}
