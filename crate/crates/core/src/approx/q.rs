use serde::{Deserialize, Serialize};

use super::trunk::{GradBuffer, Trunk, TrunkCache, TrunkInput};
use super::{trunk_input, GradientReport};
use crate::domain::{Action, Observation, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QHead {
    Scalar,
    /// Categorical distribution over `atoms` evenly spaced values in
    /// `[v_min, v_max]`.
    Distributional { atoms: usize, v_min: f64, v_max: f64 },
}

impl QHead {
    pub fn distributional_default() -> Self {
        QHead::Distributional {
            atoms: 51,
            v_min: 0.0,
            v_max: 1.0,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            QHead::Scalar => 1,
            QHead::Distributional { atoms, .. } => *atoms,
        }
    }

    pub fn support(&self) -> Option<Vec<f64>> {
        match *self {
            QHead::Scalar => None,
            QHead::Distributional { atoms, v_min, v_max } => Some(atom_values(atoms, v_min, v_max)),
        }
    }
}

pub fn atom_values(atoms: usize, v_min: f64, v_max: f64) -> Vec<f64> {
    if atoms == 1 {
        return vec![v_min];
    }
    let dz = (v_max - v_min) / (atoms - 1) as f64;
    (0..atoms).map(|i| v_min + dz * i as f64).collect()
}

/// How actions enter the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QLayout {
    /// One head per discrete action on the state trunk.
    PerAction { actions: usize },
    /// Continuous action vector concatenated to the state features.
    StateAction { action_dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QApproximator {
    pub trunk: Trunk,
    pub head: QHead,
    pub layout: QLayout,
    pub params: Vec<f64>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

impl QApproximator {
    pub fn new(trunk: Trunk, head: QHead, layout: QLayout, rng: &mut RandomStream) -> Self {
        let expected = match layout {
            QLayout::PerAction { actions } => actions * head.width(),
            QLayout::StateAction { .. } => head.width(),
        };
        assert_eq!(trunk.outputs(), expected, "trunk outputs must match the Q head");
        let params = trunk.init_params(rng);
        Self {
            trunk,
            head,
            layout,
            params,
        }
    }

    pub fn tabular(states: usize, actions: usize, head: QHead) -> Self {
        Self::new(
            Trunk::tabular(states, actions * head.width()),
            head,
            QLayout::PerAction { actions },
            &mut RandomStream::new(0, 0),
        )
    }

    pub fn mlp_per_action(input: usize, hidden: &[usize], actions: usize, head: QHead, rng: &mut RandomStream) -> Self {
        Self::new(
            Trunk::mlp(input, hidden, actions * head.width()),
            head,
            QLayout::PerAction { actions },
            rng,
        )
    }

    pub fn mlp_state_action(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        head: QHead,
        rng: &mut RandomStream,
    ) -> Self {
        Self::new(
            Trunk::mlp(state_dim + action_dim, hidden, head.width()),
            head,
            QLayout::StateAction { action_dim },
            rng,
        )
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.layout, QLayout::PerAction { .. })
    }

    fn raw(&self, obs: &Observation, action: Option<&Action>) -> (Vec<f64>, TrunkCache) {
        match self.layout {
            QLayout::PerAction { .. } => self.trunk.forward(&self.params, trunk_input(obs)),
            QLayout::StateAction { .. } => {
                let mut x = obs.features().expect("state-action Q needs features").to_vec();
                x.extend_from_slice(
                    action
                        .and_then(Action::vector)
                        .expect("state-action Q needs a continuous action"),
                );
                self.trunk.forward(&self.params, TrunkInput::Features(&x))
            }
        }
    }

    /// Slice of the raw outputs belonging to `action`.
    fn head_range(&self, action: &Action) -> std::ops::Range<usize> {
        let w = self.head.width();
        match self.layout {
            QLayout::PerAction { actions } => {
                let a = action.discrete().expect("per-action Q needs a discrete action");
                assert!(a < actions, "action {a} out of range");
                a * w..(a + 1) * w
            }
            QLayout::StateAction { .. } => 0..w,
        }
    }

    fn head_value(&self, out: &[f64]) -> f64 {
        match self.head {
            QHead::Scalar => out[0],
            QHead::Distributional { atoms, v_min, v_max } => softmax(out)
                .iter()
                .zip(atom_values(atoms, v_min, v_max))
                .map(|(p, z)| p * z)
                .sum(),
        }
    }

    /// Expected return; the mean of the atom distribution for
    /// distributional heads.
    pub fn value(&self, obs: &Observation, action: &Action) -> f64 {
        let (out, _) = self.raw(obs, Some(action));
        self.head_value(&out[self.head_range(action)])
    }

    /// Values of every discrete action from one forward pass.
    pub fn values(&self, obs: &Observation) -> Option<Vec<f64>> {
        let QLayout::PerAction { actions } = self.layout else {
            return None;
        };
        let (out, _) = self.raw(obs, None);
        let w = self.head.width();
        Some((0..actions).map(|a| self.head_value(&out[a * w..(a + 1) * w])).collect())
    }

    /// Atom probabilities; `None` for scalar heads.
    pub fn atom_probs(&self, obs: &Observation, action: &Action) -> Option<Vec<f64>> {
        if self.head == QHead::Scalar {
            return None;
        }
        let (out, _) = self.raw(obs, Some(action));
        Some(softmax(&out[self.head_range(action)]))
    }

    /// `(1/B) sum 0.5 (Q(s,a) - y)^2` for a scalar head.
    pub fn mse_gradient(&self, batch: &[(&Observation, &Action, f64)]) -> GradientReport {
        assert_eq!(self.head, QHead::Scalar, "mse needs a scalar head");
        let mut buf = GradBuffer::new(self.params.len(), self.trunk.is_tabular());
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut loss = 0.0;
        for (obs, action, y) in batch {
            let (out, cache) = self.raw(obs, Some(action));
            let r = self.head_range(action);
            let err = out[r.start] - y;
            loss += scale * 0.5 * err * err;
            let mut d = vec![0.0; out.len()];
            d[r.start] = scale * err;
            self.trunk.backward(&self.params, &cache, &d, &mut buf);
        }
        GradientReport::from_buffer(buf, loss)
    }

    /// `-(1/B) sum_i sum_k p_ik log q_k(s_i, a_i)` for a distributional head.
    pub fn cross_entropy_gradient(&self, batch: &[(&Observation, &Action, Vec<f64>)]) -> GradientReport {
        assert!(self.head != QHead::Scalar, "cross-entropy needs a distributional head");
        let mut buf = GradBuffer::new(self.params.len(), self.trunk.is_tabular());
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut loss = 0.0;
        for (obs, action, target) in batch {
            let (out, cache) = self.raw(obs, Some(action));
            let r = self.head_range(action);
            let logits = &out[r.clone()];
            let probs = softmax(logits);
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            let mut d = vec![0.0; out.len()];
            let mass: f64 = target.iter().sum();
            for k in 0..logits.len() {
                loss -= scale * target[k] * (logits[k] - lse);
                d[r.start + k] = scale * (mass * probs[k] - target[k]);
            }
            self.trunk.backward(&self.params, &cache, &d, &mut buf);
        }
        GradientReport::from_buffer(buf, loss)
    }
}
