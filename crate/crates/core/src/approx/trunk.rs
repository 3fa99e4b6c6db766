use serde::{Deserialize, Serialize};

use crate::domain::RandomStream;

/// Shared feature extractor of policies and critics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trunk {
    /// One parameter row per discrete state.
    Tabular { states: usize, outputs: usize },
    /// Fully connected tanh network with a linear output layer.
    Mlp {
        input: usize,
        hidden: Vec<usize>,
        outputs: usize,
    },
}

/// What a trunk reads.
#[derive(Debug, Clone, Copy)]
pub enum TrunkInput<'a> {
    Index(usize),
    Features(&'a [f64]),
}

#[derive(Debug, Clone)]
pub enum TrunkCache {
    Tabular { row: usize },
    /// Layer inputs: the network input followed by each hidden activation.
    Mlp { layers: Vec<Vec<f64>> },
}

/// Gradient buffer that remembers which rows a tabular trunk touched.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    pub grad: Vec<f64>,
    touched: Option<Vec<usize>>,
}

impl GradBuffer {
    pub fn new(len: usize, sparse: bool) -> Self {
        let grad = if sparse {
            super::take_zeroed(len)
        } else {
            vec![0.0; len]
        };
        Self {
            grad,
            touched: sparse.then(Vec::new),
        }
    }

    fn touch(&mut self, start: usize, len: usize) {
        if let Some(t) = &mut self.touched {
            t.extend(start..start + len);
        }
    }

    /// Sorted, deduplicated parameter indices, or `None` for dense gradients.
    pub fn into_parts(self) -> (Vec<f64>, Option<Vec<usize>>) {
        let touched = self.touched.map(|mut t| {
            t.sort_unstable();
            t.dedup();
            t
        });
        (self.grad, touched)
    }
}

impl Trunk {
    pub fn tabular(states: usize, outputs: usize) -> Self {
        Trunk::Tabular { states, outputs }
    }

    pub fn mlp(input: usize, hidden: &[usize], outputs: usize) -> Self {
        Trunk::Mlp {
            input,
            hidden: hidden.to_vec(),
            outputs,
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            Trunk::Tabular { outputs, .. } | Trunk::Mlp { outputs, .. } => *outputs,
        }
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self, Trunk::Tabular { .. })
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        match self {
            Trunk::Tabular { .. } => Vec::new(),
            Trunk::Mlp {
                input,
                hidden,
                outputs,
            } => {
                let mut dims = Vec::with_capacity(hidden.len() + 1);
                let mut prev = *input;
                for &h in hidden.iter().chain(std::iter::once(outputs)) {
                    dims.push((prev, h));
                    prev = h;
                }
                dims
            }
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Trunk::Tabular { states, outputs } => states * outputs,
            Trunk::Mlp { .. } => self
                .layer_dims()
                .iter()
                .map(|(i, o)| i * o + o)
                .sum(),
        }
    }

    /// Tabular parameters start at zero; MLP weights are Glorot-uniform with a
    /// shrunken output layer and zero biases.
    pub fn init_params(&self, rng: &mut RandomStream) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count());
        match self {
            Trunk::Tabular { .. } => params.resize(self.param_count(), 0.0),
            Trunk::Mlp { .. } => {
                let dims = self.layer_dims();
                let last = dims.len() - 1;
                for (l, (fan_in, fan_out)) in dims.into_iter().enumerate() {
                    let mut limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    if l == last {
                        limit *= 0.1;
                    }
                    for _ in 0..fan_in * fan_out {
                        params.push(limit * (2.0 * rng.uniform() - 1.0));
                    }
                    params.extend(std::iter::repeat_n(0.0, fan_out));
                }
            }
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: TrunkInput<'_>) -> (Vec<f64>, TrunkCache) {
        match (self, input) {
            (Trunk::Tabular { states, outputs }, TrunkInput::Index(i)) => {
                assert!(i < *states, "state index {i} out of range {states}");
                let start = i * outputs;
                (
                    params[start..start + outputs].to_vec(),
                    TrunkCache::Tabular { row: i },
                )
            }
            (Trunk::Mlp { input, .. }, TrunkInput::Features(x)) => {
                assert_eq!(x.len(), *input, "feature length mismatch");
                let dims = self.layer_dims();
                let last = dims.len() - 1;
                let mut layers = Vec::with_capacity(dims.len());
                let mut h = x.to_vec();
                let mut offset = 0;
                for (l, (fan_in, fan_out)) in dims.into_iter().enumerate() {
                    let w = &params[offset..offset + fan_in * fan_out];
                    let b = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
                    offset += fan_in * fan_out + fan_out;
                    let mut out = b.to_vec();
                    for (o, out_o) in out.iter_mut().enumerate() {
                        let row = &w[o * fan_in..(o + 1) * fan_in];
                        *out_o += row.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
                    }
                    if l != last {
                        for v in &mut out {
                            *v = v.tanh();
                        }
                    }
                    layers.push(std::mem::replace(&mut h, out));
                }
                (h, TrunkCache::Mlp { layers })
            }
            (Trunk::Tabular { .. }, TrunkInput::Features(_)) => {
                panic!("tabular trunk requires an index observation")
            }
            (Trunk::Mlp { .. }, TrunkInput::Index(_)) => {
                panic!("mlp trunk requires a feature observation")
            }
        }
    }

    /// Accumulates `d loss / d params` given `d loss / d output`.
    pub fn backward(&self, params: &[f64], cache: &TrunkCache, d_out: &[f64], buf: &mut GradBuffer) {
        match (self, cache) {
            (Trunk::Tabular { outputs, .. }, TrunkCache::Tabular { row }) => {
                let start = row * outputs;
                for (g, d) in buf.grad[start..start + outputs].iter_mut().zip(d_out) {
                    *g += d;
                }
                buf.touch(start, *outputs);
            }
            (Trunk::Mlp { .. }, TrunkCache::Mlp { layers }) => {
                let dims = self.layer_dims();
                let mut offsets = Vec::with_capacity(dims.len());
                let mut off = 0;
                for (i, o) in &dims {
                    offsets.push(off);
                    off += i * o + o;
                }
                let mut delta = d_out.to_vec();
                for l in (0..dims.len()).rev() {
                    let (fan_in, fan_out) = dims[l];
                    let off = offsets[l];
                    let x = &layers[l];
                    for o in 0..fan_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        let row = &mut buf.grad[off + o * fan_in..off + (o + 1) * fan_in];
                        for (g, xi) in row.iter_mut().zip(x) {
                            *g += d * xi;
                        }
                        buf.grad[off + fan_in * fan_out + o] += d;
                    }
                    if l == 0 {
                        break;
                    }
                    // Propagate through the weights and the tanh that produced x.
                    let w = &params[off..off + fan_in * fan_out];
                    let mut prev = vec![0.0; fan_in];
                    for o in 0..fan_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        for (p, wi) in prev.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                            *p += d * wi;
                        }
                    }
                    for (p, xi) in prev.iter_mut().zip(x) {
                        *p *= 1.0 - xi * xi;
                    }
                    delta = prev;
                }
            }
            _ => panic!("trunk cache does not match trunk"),
        }
    }
}
