use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::trunk::{GradBuffer, Trunk, TrunkCache, TrunkInput};
use super::GradientReport;
use crate::domain::{Action, Observation, RandomStream, StochasticPolicy};

pub const STD_MIN: f64 = 1e-3;
pub const STD_MAX: f64 = 1.0;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyHead {
    Categorical { actions: usize },
    /// State-dependent mean and squashed standard deviation per dimension.
    Gaussian { dim: usize },
}

impl PolicyHead {
    pub fn output_dim(&self) -> usize {
        match self {
            PolicyHead::Categorical { actions } => *actions,
            PolicyHead::Gaussian { dim } => 2 * dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyDistribution {
    Categorical { probs: Vec<f64>, log_probs: Vec<f64> },
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

impl PolicyDistribution {
    fn from_head(head: PolicyHead, out: &[f64]) -> Self {
        match head {
            PolicyHead::Categorical { .. } => {
                let log_probs = log_softmax(out);
                let probs = log_probs.iter().map(|l| l.exp()).collect();
                PolicyDistribution::Categorical { probs, log_probs }
            }
            PolicyHead::Gaussian { dim } => PolicyDistribution::Gaussian {
                mean: out[..dim].to_vec(),
                std: out[dim..]
                    .iter()
                    .map(|u| STD_MIN + (STD_MAX - STD_MIN) * sigmoid(*u))
                    .collect(),
            },
        }
    }

    pub fn log_density(&self, action: &Action) -> f64 {
        match (self, action) {
            (PolicyDistribution::Categorical { log_probs, .. }, Action::Discrete(a)) => log_probs
                .get(*a)
                .copied()
                .unwrap_or(f64::NEG_INFINITY),
            (PolicyDistribution::Gaussian { mean, std }, Action::Continuous(x)) => mean
                .iter()
                .zip(std)
                .zip(x)
                .map(|((m, s), x)| {
                    let z = (x - m) / s;
                    -0.5 * z * z - s.ln() - LN_SQRT_2PI
                })
                .sum(),
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn mode(&self) -> Action {
        match self {
            PolicyDistribution::Categorical { probs, .. } => Action::Discrete(argmax(probs)),
            PolicyDistribution::Gaussian { mean, .. } => Action::continuous_clipped(mean.iter().copied()),
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Action {
        match self {
            PolicyDistribution::Categorical { probs, .. } => {
                let u = rng.uniform();
                let mut acc = 0.0;
                for (a, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Action::Discrete(a);
                    }
                }
                // Rounding can leave acc a hair under 1.
                Action::Discrete(probs.iter().rposition(|p| *p > 0.0).unwrap_or(0))
            }
            PolicyDistribution::Gaussian { mean, std } => Action::continuous_clipped(
                mean.iter().zip(std).map(|(m, s)| {
                    let n: f64 = StandardNormal.sample(rng);
                    m + s * n
                }),
            ),
        }
    }

    pub fn probs(&self) -> Option<&[f64]> {
        match self {
            PolicyDistribution::Categorical { probs, .. } => Some(probs),
            PolicyDistribution::Gaussian { .. } => None,
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            PolicyDistribution::Categorical { probs, log_probs } => -probs
                .iter()
                .zip(log_probs)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, l)| p * l)
                .sum::<f64>(),
            PolicyDistribution::Gaussian { std, .. } => std
                .iter()
                .map(|s| 0.5 + LN_SQRT_2PI + s.ln())
                .sum(),
        }
    }

    /// `KL(self || other)`.
    pub fn kl(&self, other: &PolicyDistribution) -> f64 {
        match (self, other) {
            (
                PolicyDistribution::Categorical { probs, log_probs },
                PolicyDistribution::Categorical { log_probs: lq, .. },
            ) => probs
                .iter()
                .zip(log_probs.iter().zip(lq))
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, (lp, lq))| p * (lp - lq))
                .sum(),
            (
                PolicyDistribution::Gaussian { mean: m1, std: s1 },
                PolicyDistribution::Gaussian { mean: m2, std: s2 },
            ) => m1
                .iter()
                .zip(s1)
                .zip(m2.iter().zip(s2))
                .map(|((m1, s1), (m2, s2))| {
                    (s2 / s1).ln() + (s1 * s1 + (m1 - m2).powi(2)) / (2.0 * s2 * s2) - 0.5
                })
                .sum(),
            _ => f64::NAN,
        }
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// One state with the actions and weights fitted at it.
#[derive(Debug, Clone)]
pub struct FitGroup<'a> {
    pub state: &'a Observation,
    pub targets: Vec<(Action, f64)>,
}

/// A differentiable state-conditional action distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricPolicy {
    pub trunk: Trunk,
    pub head: PolicyHead,
    pub params: Vec<f64>,
}

pub(crate) fn trunk_input(obs: &Observation) -> TrunkInput<'_> {
    match obs {
        Observation::Index(i) => TrunkInput::Index(*i),
        Observation::Features(f) => TrunkInput::Features(f),
    }
}

impl ParametricPolicy {
    pub fn new(trunk: Trunk, head: PolicyHead, rng: &mut RandomStream) -> Self {
        assert_eq!(
            trunk.outputs(),
            head.output_dim(),
            "trunk outputs must match the policy head"
        );
        let params = trunk.init_params(rng);
        Self { trunk, head, params }
    }

    /// Uniform categorical policy over a table of states.
    pub fn tabular_categorical(states: usize, actions: usize) -> Self {
        let head = PolicyHead::Categorical { actions };
        Self::new(Trunk::tabular(states, actions), head, &mut RandomStream::new(0, 0))
    }

    pub fn mlp_categorical(input: usize, hidden: &[usize], actions: usize, rng: &mut RandomStream) -> Self {
        Self::new(
            Trunk::mlp(input, hidden, actions),
            PolicyHead::Categorical { actions },
            rng,
        )
    }

    pub fn mlp_gaussian(input: usize, hidden: &[usize], dim: usize, rng: &mut RandomStream) -> Self {
        Self::new(
            Trunk::mlp(input, hidden, 2 * dim),
            PolicyHead::Gaussian { dim },
            rng,
        )
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn forward(&self, obs: &Observation) -> (PolicyDistribution, TrunkCache, Vec<f64>) {
        let (out, cache) = self.trunk.forward(&self.params, trunk_input(obs));
        (PolicyDistribution::from_head(self.head, &out), cache, out)
    }

    pub fn distribution(&self, obs: &Observation) -> PolicyDistribution {
        self.forward(obs).0
    }

    /// `d log pi(a|s) / d head outputs`.
    fn d_log_density(&self, dist: &PolicyDistribution, out: &[f64], action: &Action) -> Vec<f64> {
        match (dist, action) {
            (PolicyDistribution::Categorical { probs, .. }, Action::Discrete(a)) => {
                let mut d: Vec<f64> = probs.iter().map(|p| -p).collect();
                d[*a] += 1.0;
                d
            }
            (PolicyDistribution::Gaussian { mean, std }, Action::Continuous(x)) => {
                let dim = mean.len();
                let mut d = vec![0.0; 2 * dim];
                for k in 0..dim {
                    let (m, s) = (mean[k], std[k]);
                    let r = x[k] - m;
                    d[k] = r / (s * s);
                    let d_std = r * r / (s * s * s) - 1.0 / s;
                    let sg = sigmoid(out[dim + k]);
                    d[dim + k] = d_std * (STD_MAX - STD_MIN) * sg * (1.0 - sg);
                }
                d
            }
            _ => panic!("action kind does not match the policy head"),
        }
    }

    /// `-(1/G) sum_g sum_j w_gj log pi(a_gj | s_g)` and its gradient.
    pub fn grouped_nll_gradient(&self, groups: &[FitGroup<'_>]) -> GradientReport {
        let mut buf = GradBuffer::new(self.params.len(), self.trunk.is_tabular());
        let mut loss = 0.0;
        let scale = 1.0 / groups.len().max(1) as f64;
        for g in groups {
            let (dist, cache, out) = self.forward(g.state);
            let mut d_out = vec![0.0; out.len()];
            let mut any = false;
            for (action, w) in &g.targets {
                if *w == 0.0 {
                    continue;
                }
                any = true;
                loss -= scale * w * dist.log_density(action);
                for (d, dl) in d_out.iter_mut().zip(self.d_log_density(&dist, &out, action)) {
                    *d -= scale * w * dl;
                }
            }
            if any {
                self.trunk.backward(&self.params, &cache, &d_out, &mut buf);
            }
        }
        GradientReport::from_buffer(buf, loss)
    }

    /// `-(1/B) sum_i w_i log pi(a_i | s_i)` and its gradient.
    pub fn weighted_nll_gradient(&self, batch: &[(Observation, Action, f64)]) -> GradientReport {
        let groups: Vec<FitGroup<'_>> = batch
            .iter()
            .map(|(s, a, w)| FitGroup {
                state: s,
                targets: vec![(a.clone(), *w)],
            })
            .collect();
        self.grouped_nll_gradient(&groups)
    }

    /// `coef * (1/B) sum_s KL(pi_self(.|s) || pi_reference(.|s))` and its
    /// gradient with respect to this policy's parameters.
    pub fn kl_penalty_gradient(
        &self,
        reference: &ParametricPolicy,
        states: &[&Observation],
        coef: f64,
    ) -> GradientReport {
        let mut buf = GradBuffer::new(self.params.len(), self.trunk.is_tabular());
        let mut loss = 0.0;
        let scale = coef / states.len().max(1) as f64;
        for obs in states {
            let (dist, cache, out) = self.forward(obs);
            let refd = reference.distribution(obs);
            let kl = dist.kl(&refd);
            loss += scale * kl;
            let d_out: Vec<f64> = match (&dist, &refd) {
                (
                    PolicyDistribution::Categorical { probs, log_probs },
                    PolicyDistribution::Categorical { log_probs: lq, .. },
                ) => probs
                    .iter()
                    .zip(log_probs.iter().zip(lq))
                    .map(|(p, (lp, lq))| scale * p * (lp - lq - kl))
                    .collect(),
                (
                    PolicyDistribution::Gaussian { mean: m1, std: s1 },
                    PolicyDistribution::Gaussian { mean: m2, std: s2 },
                ) => {
                    let dim = m1.len();
                    let mut d = vec![0.0; 2 * dim];
                    for k in 0..dim {
                        d[k] = scale * (m1[k] - m2[k]) / (s2[k] * s2[k]);
                        let d_std = -1.0 / s1[k] + s1[k] / (s2[k] * s2[k]);
                        let sg = sigmoid(out[dim + k]);
                        d[dim + k] = scale * d_std * (STD_MAX - STD_MIN) * sg * (1.0 - sg);
                    }
                    d
                }
                _ => panic!("reference policy head differs"),
            };
            self.trunk.backward(&self.params, &cache, &d_out, &mut buf);
        }
        GradientReport::from_buffer(buf, loss)
    }
}

impl StochasticPolicy for ParametricPolicy {
    fn sample(&self, obs: &Observation, rng: &mut RandomStream) -> Action {
        self.distribution(obs).sample(rng)
    }

    fn mode(&self, obs: &Observation) -> Action {
        self.distribution(obs).mode()
    }

    fn log_density(&self, obs: &Observation, action: &Action) -> f64 {
        self.distribution(obs).log_density(action)
    }

    fn action_probs(&self, obs: &Observation) -> Option<Vec<f64>> {
        self.distribution(obs).probs().map(<[f64]>::to_vec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_categorical_log_density() {
        let p = ParametricPolicy::tabular_categorical(3, 6);
        for a in 0..6 {
            let ld = p.log_density(&Observation::Index(1), &Action::Discrete(a));
            assert!((ld - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_categorical_samples_its_mass() {
        let mut p = ParametricPolicy::tabular_categorical(1, 6);
        p.params[0] = 1e3;
        let obs = Observation::Index(0);
        let mut rng = RandomStream::new(0, 0);
        assert_eq!(p.mode(&obs), Action::Discrete(0));
        for _ in 0..1000 {
            assert_eq!(p.sample(&obs, &mut rng), Action::Discrete(0));
        }
    }

    #[test]
    fn gaussian_peak_density() {
        let mut p = ParametricPolicy::mlp_gaussian(2, &[4], 2, &mut RandomStream::new(1, 0));
        for v in &mut p.params {
            *v = 0.0;
        }
        let obs = Observation::Features(vec![0.2, -0.1]);
        let dist = p.distribution(&obs);
        let PolicyDistribution::Gaussian { mean, std } = &dist else {
            panic!()
        };
        assert_eq!(p.mode(&obs), Action::Continuous(mean.clone()));
        let expected: f64 = std.iter().map(|s| -(s * (2.0 * std::f64::consts::PI).sqrt()).ln()).sum();
        let ld = p.log_density(&obs, &Action::Continuous(mean.clone()));
        assert!((ld - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_annihilate() {
        let p = ParametricPolicy::mlp_categorical(3, &[5], 4, &mut RandomStream::new(2, 0));
        let batch: Vec<_> = (0..5)
            .map(|i| (Observation::Features(vec![i as f64, 0.5, -0.5]), Action::Discrete(i % 4), 0.0))
            .collect();
        let r = p.weighted_nll_gradient(&batch);
        assert_eq!(r.loss, 0.0);
        assert!(r.gradient.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn std_stays_bounded() {
        let mut p = ParametricPolicy::mlp_gaussian(1, &[3], 1, &mut RandomStream::new(3, 0));
        let obs = Observation::Features(vec![1.0]);
        for scale in [-1e6, -50.0, 0.0, 50.0, 1e6] {
            let n = p.params.len();
            p.params[n - 1] = scale;
            let PolicyDistribution::Gaussian { std, .. } = p.distribution(&obs) else {
                panic!()
            };
            assert!(std[0] >= STD_MIN && std[0] <= STD_MAX);
        }
    }
}
