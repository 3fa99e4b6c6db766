//! Policies and Q-functions with hand-written reverse-mode gradients, an Adam
//! optimizer and a flat checkpoint format.

mod adam;
mod checkpoint;
mod policy;
mod q;
mod trunk;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, ModelHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use policy::{FitGroup, ParametricPolicy, PolicyDistribution, PolicyHead, STD_MAX, STD_MIN};
pub use q::{atom_values, QApproximator, QHead, QLayout};
pub use trunk::{GradBuffer, Trunk, TrunkCache, TrunkInput};

pub(crate) use policy::trunk_input;
#[allow(unused_imports)]
pub(crate) use policy::argmax;

thread_local! {
    // Zeroed gradient buffers for tabular trunks, which would otherwise clear
    // the whole table on every backward pass.
    static ZEROED: std::cell::RefCell<Vec<Vec<f64>>> = const { std::cell::RefCell::new(Vec::new()) };
}

const POOL_SIZE: usize = 8;

pub(crate) fn take_zeroed(len: usize) -> Vec<f64> {
    ZEROED
        .with(|pool| {
            let mut pool = pool.borrow_mut();
            let i = pool.iter().position(|b| b.len() == len)?;
            Some(pool.swap_remove(i))
        })
        .unwrap_or_else(|| vec![0.0; len])
}

/// A loss value and its gradient with respect to a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub gradient: Vec<f64>,
    pub loss: f64,
    /// Parameter indices that may be nonzero; `None` means dense. Entries
    /// outside the support must be zero.
    pub support: Option<Vec<usize>>,
}

impl Drop for GradientReport {
    fn drop(&mut self) {
        let Some(support) = &self.support else { return };
        let mut grad = std::mem::take(&mut self.gradient);
        for &i in support {
            grad[i] = 0.0;
        }
        let _ = ZEROED.try_with(|pool| {
            let mut pool = pool.borrow_mut();
            if pool.len() < POOL_SIZE {
                pool.push(grad);
            }
        });
    }
}

impl GradientReport {
    pub fn zeros(len: usize) -> Self {
        Self {
            gradient: vec![0.0; len],
            loss: 0.0,
            support: None,
        }
    }

    pub(crate) fn from_buffer(buf: GradBuffer, loss: f64) -> Self {
        let (gradient, support) = buf.into_parts();
        Self {
            gradient,
            loss,
            support,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite()
            && match &self.support {
                Some(idx) => idx.iter().all(|&i| self.gradient[i].is_finite()),
                None => self.gradient.iter().all(|g| g.is_finite()),
            }
    }

    /// Adds another report over the same parameters.
    pub fn accumulate(&mut self, other: &GradientReport) {
        assert_eq!(self.gradient.len(), other.gradient.len());
        self.loss += other.loss;
        match (&mut self.support, &other.support) {
            (Some(a), Some(b)) => {
                for &i in b {
                    self.gradient[i] += other.gradient[i];
                }
                a.extend_from_slice(b);
                a.sort_unstable();
                a.dedup();
            }
            _ => {
                for (g, o) in self.gradient.iter_mut().zip(&other.gradient) {
                    *g += o;
                }
                self.support = None;
            }
        }
    }
}

