//! Policy evaluation by TD learning with a periodically synced target
//! network, a categorical distributional head and advantage estimates.

mod projection;

use serde::{Deserialize, Serialize};

use crate::approx::{Adam, AdamConfig, GradientReport, QApproximator, QHead};
use crate::domain::{Action, Observation, RandomStream, StochasticPolicy, Transition};
use crate::{Error, Result};

pub use projection::project_distribution;
use projection::accumulate_projection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticConfig {
    pub gamma: f64,
    /// Gradient steps between target syncs.
    pub target_period: u64,
    /// Next-action samples when the policy has no closed-form distribution.
    pub bootstrap_samples: usize,
    pub optimizer: AdamConfig,
}

impl Default for CriticConfig {
    fn default() -> Self {
        Self {
            gamma: 0.98,
            target_period: 100,
            bootstrap_samples: 10,
            optimizer: AdamConfig::default(),
        }
    }
}

/// How the state baseline `E_pi[Q(s, .)]` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    /// Probability-weighted sum over discrete actions.
    Exact,
    Samples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageEstimate {
    pub value: f64,
    pub baseline: f64,
    /// Policy samples behind the baseline; 0 for the exact expectation.
    pub m_samples: usize,
}

/// Regression targets for one batch.
#[derive(Debug, Clone, PartialEq)]
pub enum TdTargets {
    Scalar(Vec<f64>),
    Distributional(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct CriticLearner {
    online: QApproximator,
    target: QApproximator,
    config: CriticConfig,
    optimizer: Adam,
    updates: u64,
}

impl CriticLearner {
    pub fn new(q: QApproximator, config: CriticConfig) -> Result<Self> {
        if !(0.0..1.0).contains(&config.gamma) {
            return Err(Error::InvalidArgument(format!("gamma {} outside [0, 1)", config.gamma)));
        }
        if config.target_period == 0 || config.bootstrap_samples == 0 {
            return Err(Error::InvalidArgument("target period and bootstrap samples must be positive".into()));
        }
        Ok(Self {
            optimizer: Adam::new(config.optimizer, q.param_count()),
            target: q.clone(),
            online: q,
            config,
            updates: 0,
        })
    }

    pub fn online(&self) -> &QApproximator {
        &self.online
    }

    pub fn target(&self) -> &QApproximator {
        &self.target
    }

    pub fn config(&self) -> &CriticConfig {
        &self.config
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn q(&self, obs: &Observation, action: &Action) -> f64 {
        self.online.value(obs, action)
    }

    pub fn sync_target(&mut self) {
        self.target.params.clone_from(&self.online.params);
    }

    /// `E_{a' ~ policy}` of the target network at `next`, as atom
    /// probabilities (distributional) or a single value (scalar).
    fn bootstrap<P>(&self, next: &Observation, policy: &P, rng: &mut RandomStream) -> Vec<f64>
    where
        P: StochasticPolicy + ?Sized,
    {
        let weighted: Vec<(Action, f64)> = match (self.target.is_discrete(), policy.action_probs(next)) {
            (true, Some(probs)) => probs
                .into_iter()
                .enumerate()
                .filter(|(_, p)| *p > 0.0)
                .map(|(a, p)| (Action::Discrete(a), p))
                .collect(),
            _ => {
                let m = self.config.bootstrap_samples;
                (0..m).map(|_| (policy.sample(next, rng), 1.0 / m as f64)).collect()
            }
        };
        match self.target.head {
            QHead::Scalar => {
                let v = if let (Some(all), true) = (self.target.values(next), self.target.is_discrete()) {
                    weighted
                        .iter()
                        .map(|(a, p)| p * all[a.discrete().unwrap_or(0)])
                        .sum()
                } else {
                    weighted.iter().map(|(a, p)| p * self.target.value(next, a)).sum()
                };
                vec![v]
            }
            QHead::Distributional { atoms, .. } => {
                let mut mix = vec![0.0; atoms];
                for (a, p) in &weighted {
                    let probs = self.target.atom_probs(next, a).unwrap_or_default();
                    for (m, q) in mix.iter_mut().zip(probs) {
                        *m += p * q;
                    }
                }
                mix
            }
        }
    }

    pub fn td_targets<P>(&self, batch: &[&Transition], policy: &P, rng: &mut RandomStream) -> TdTargets
    where
        P: StochasticPolicy + ?Sized,
    {
        let gamma = self.config.gamma;
        match self.online.head {
            QHead::Scalar => TdTargets::Scalar(
                batch
                    .iter()
                    .map(|t| {
                        if t.terminal {
                            t.reward
                        } else {
                            t.reward + gamma * self.bootstrap(&t.next_state, policy, rng)[0]
                        }
                    })
                    .collect(),
            ),
            QHead::Distributional { atoms, v_min, v_max } => {
                let support = crate::approx::atom_values(atoms, v_min, v_max);
                TdTargets::Distributional(
                    batch
                        .iter()
                        .map(|t| {
                            let mut out = vec![0.0; atoms];
                            if t.terminal {
                                accumulate_projection(&mut out, &[t.reward], &[1.0], 1.0, v_min, v_max);
                            } else {
                                let next = self.bootstrap(&t.next_state, policy, rng);
                                let shifted: Vec<f64> = support.iter().map(|z| t.reward + gamma * z).collect();
                                accumulate_projection(&mut out, &shifted, &next, 1.0, v_min, v_max);
                            }
                            out
                        })
                        .collect(),
                )
            }
        }
    }

    /// Loss and gradient of the online network against fixed targets.
    pub fn td_loss(&self, batch: &[&Transition], targets: &TdTargets) -> GradientReport {
        match targets {
            TdTargets::Scalar(y) => {
                let items: Vec<_> = batch
                    .iter()
                    .zip(y)
                    .map(|(t, y)| (&t.state, &t.action, *y))
                    .collect();
                self.online.mse_gradient(&items)
            }
            TdTargets::Distributional(p) => {
                let items: Vec<_> = batch
                    .iter()
                    .zip(p)
                    .map(|(t, p)| (&t.state, &t.action, p.clone()))
                    .collect();
                self.online.cross_entropy_gradient(&items)
            }
        }
    }

    /// Applies a gradient to the online network and syncs the target every
    /// `target_period` updates.
    pub fn apply(&mut self, report: &GradientReport) {
        self.optimizer.step(&mut self.online.params, report);
        self.updates += 1;
        if self.updates % self.config.target_period == 0 {
            self.sync_target();
        }
    }

    /// One TD step: targets from the target network, gradient, update.
    pub fn td_update<P>(&mut self, batch: &[&Transition], policy: &P, rng: &mut RandomStream) -> Result<GradientReport>
    where
        P: StochasticPolicy + ?Sized,
    {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty critic batch".into()));
        }
        let targets = self.td_targets(batch, policy, rng);
        let report = self.td_loss(batch, &targets);
        if !report.is_finite() {
            return Err(Error::NumericDivergence {
                step: self.updates,
                detail: format!("critic loss {}", report.loss),
            });
        }
        self.apply(&report);
        Ok(report)
    }

    /// `E_{a ~ policy}[Q(s, a)]` under the online network.
    pub fn baseline<P>(&self, state: &Observation, policy: &P, mode: Baseline, rng: &mut RandomStream) -> Result<(f64, usize)>
    where
        P: StochasticPolicy + ?Sized,
    {
        match mode {
            Baseline::Exact => {
                let probs = policy
                    .action_probs(state)
                    .ok_or_else(|| Error::InvalidArgument("exact baseline needs a discrete policy".into()))?;
                let values = self
                    .online
                    .values(state)
                    .ok_or_else(|| Error::InvalidArgument("exact baseline needs a per-action critic".into()))?;
                Ok((probs.iter().zip(&values).map(|(p, q)| p * q).sum(), 0))
            }
            Baseline::Samples(0) => Err(Error::InvalidArgument("baseline needs at least one sample".into())),
            Baseline::Samples(m) => {
                let sum: f64 = (0..m).map(|_| self.q(state, &policy.sample(state, rng))).sum();
                Ok((sum / m as f64, m))
            }
        }
    }

    pub fn advantage<P>(
        &self,
        state: &Observation,
        action: &Action,
        policy: &P,
        mode: Baseline,
        rng: &mut RandomStream,
    ) -> Result<AdvantageEstimate>
    where
        P: StochasticPolicy + ?Sized,
    {
        let (baseline, m_samples) = self.baseline(state, policy, mode, rng)?;
        Ok(AdvantageEstimate {
            value: self.q(state, action) - baseline,
            baseline,
            m_samples,
        })
    }
}
