use serde::{Deserialize, Serialize};

use super::GradientReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Adam. Sparse reports (tabular trunks) only advance the moments of the
/// entries in their support, so untouched table rows keep their state. Bias
/// correction uses each entry's own update count; for dense gradients this is
/// plain Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    counts: Vec<u32>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            counts: vec![0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    fn update_one(&mut self, params: &mut [f64], i: usize, g: f64) {
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let g = g + weight_decay * params[i];
        self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
        self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
        self.counts[i] = self.counts[i].saturating_add(1);
        let n = self.counts[i] as i32;
        let m_hat = self.m[i] / (1.0 - beta1.powi(n));
        let v_hat = self.v[i] / (1.0 - beta2.powi(n));
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }

    pub fn step(&mut self, params: &mut [f64], report: &GradientReport) {
        assert_eq!(params.len(), report.gradient.len(), "gradient length mismatch");
        assert_eq!(params.len(), self.m.len(), "optimizer length mismatch");
        self.t += 1;
        match &report.support {
            Some(support) => {
                for &i in support {
                    self.update_one(params, i, report.gradient[i]);
                }
            }
            None => {
                for i in 0..params.len() {
                    self.update_one(params, i, report.gradient[i]);
                }
            }
        }
    }
}
