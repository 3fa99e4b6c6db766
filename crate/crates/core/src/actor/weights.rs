use crate::{Error, Result};

pub const ETA_MIN: f64 = 1e-6;
pub const ETA_MAX: f64 = 1e6;
const DUAL_ITERATIONS: usize = 200;

/// `exp(Q_i/eta) / mean_j exp(Q_j/eta)` for the samples of one state.
pub fn compute_weights_softmax(q: &[f64], eta: f64) -> Vec<f64> {
    let coef = vec![1.0 / q.len() as f64; q.len()];
    softmax_weights_weighted(q, &coef, eta)
}

/// Softmax weights where sample `j` carries prior mass `coef[j]` (summing to
/// one); the coefficient-weighted mean of the result is 1.
pub fn softmax_weights_weighted(q: &[f64], coef: &[f64], eta: f64) -> Vec<f64> {
    assert!(eta > 0.0, "temperature must be positive");
    assert_eq!(q.len(), coef.len());
    let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = q.iter().map(|v| ((v - max) / eta).exp()).collect();
    let z: f64 = e.iter().zip(coef).map(|(e, c)| e * c).sum();
    e.into_iter().map(|e| e / z).collect()
}

/// `min(exp(A/eta), clip)`.
pub fn compute_weights_advantage(advantages: &[f64], eta: f64, clip: Option<f64>) -> Vec<f64> {
    assert!(eta > 0.0, "temperature must be positive");
    advantages
        .iter()
        .map(|a| {
            let w = (a / eta).exp();
            clip.map_or(w, |c| w.min(c))
        })
        .collect()
}

/// Samples of one state: critic values and prior masses.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSamples {
    pub q: Vec<f64>,
    pub coef: Vec<f64>,
}

impl StateSamples {
    pub fn uniform(q: Vec<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            coef: vec![1.0 / n as f64; n],
        }
    }

    fn log_z(&self, eta: f64) -> (f64, f64) {
        let max = self.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = self
            .q
            .iter()
            .zip(&self.coef)
            .map(|(q, c)| c * ((q - max) / eta).exp())
            .sum();
        (max, z.ln())
    }

    /// `KL(improved || prior)` of the reweighted sample distribution.
    pub fn kl(&self, eta: f64) -> f64 {
        let max = self.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut zx) = (0.0, 0.0);
        for (q, c) in self.q.iter().zip(&self.coef) {
            if *c > 0.0 {
                let x = (q - max) / eta;
                let e = c * x.exp();
                z += e;
                zx += e * x;
            }
        }
        (zx / z - z.ln()).max(0.0)
    }

    fn is_flat(&self) -> bool {
        self.q.iter().all(|q| *q == self.q[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolution {
    pub eta: f64,
    pub mean_kl: f64,
    /// Every state had identical values, so any temperature is optimal.
    pub degenerate: bool,
}

pub fn mean_kl(states: &[StateSamples], eta: f64) -> f64 {
    states.iter().map(|s| s.kl(eta)).sum::<f64>() / states.len() as f64
}

/// `g(eta) = eta*eps + eta * mean_s log sum_j c_j exp(Q_j/eta)`.
pub fn dual_objective(states: &[StateSamples], eps: f64, eta: f64) -> f64 {
    let mean: f64 = states
        .iter()
        .map(|s| {
            let (max, log_z) = s.log_z(eta);
            max / eta + log_z
        })
        .sum::<f64>()
        / states.len() as f64;
    eta * eps + eta * mean
}

/// Minimizes the convex temperature dual on `[ETA_MIN, ETA_MAX]`.
///
/// `g'(eta) = eps - mean_kl(eta)` and the KL falls monotonically with
/// `eta`, so the minimizer is the root of the KL constraint, found by
/// bisection in log space; the feasible end of the bracket is returned.
pub fn solve_eta_dual_weighted(states: &[StateSamples], eps: f64) -> Result<DualSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("KL bound {eps} must be positive")));
    }
    if states.is_empty() {
        return Err(Error::InvalidArgument("dual needs at least one state".into()));
    }
    if states.iter().all(StateSamples::is_flat) {
        return Ok(DualSolution {
            eta: 1.0,
            mean_kl: 0.0,
            degenerate: true,
        });
    }
    let kl_lo = mean_kl(states, ETA_MIN);
    if kl_lo <= eps {
        return Ok(DualSolution {
            eta: ETA_MIN,
            mean_kl: kl_lo,
            degenerate: false,
        });
    }
    let kl_hi = mean_kl(states, ETA_MAX);
    if kl_hi > eps {
        return Ok(DualSolution {
            eta: ETA_MAX,
            mean_kl: kl_hi,
            degenerate: false,
        });
    }
    let (mut lo, mut hi) = (ETA_MIN.ln(), ETA_MAX.ln());
    for _ in 0..DUAL_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mean_kl(states, mid.exp()) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let eta = hi.exp();
    Ok(DualSolution {
        eta,
        mean_kl: mean_kl(states, eta),
        degenerate: false,
    })
}

/// Dual over equally weighted samples per state.
pub fn solve_eta_dual(q_samples: &[Vec<f64>], eps: f64) -> Result<DualSolution> {
    if q_samples.iter().any(|q| q.len() < 2) {
        return Err(Error::InvalidArgument("dual needs at least two samples per state".into()));
    }
    let states: Vec<StateSamples> = q_samples.iter().cloned().map(StateSamples::uniform).collect();
    solve_eta_dual_weighted(&states, eps)
}
