//! The exponential-weighted policy improvement objective
//!
//! ```text
//! loss = -(1/B) sum_s sum_j c_j w_j log pi(a_j | s),   a_j ~ prior(.|s)
//! ```
//!
//! with pluggable priors, per-sample prior masses `c_j`, and three weighting
//! rules (unit, softmax-normalized and clipped exponential advantage).

mod prior;
mod weights;

use serde::{Deserialize, Serialize};

use crate::approx::{Adam, AdamConfig, FitGroup, GradientReport, ParametricPolicy};
use crate::critic::{Baseline, CriticLearner};
use crate::domain::{Action, Observation, RandomStream, StochasticPolicy, Transition};
use crate::{Error, Result};

pub use prior::{draw_prior_actions, Origin, PriorComponent, PriorSpec};
pub use weights::{
    compute_weights_advantage, compute_weights_softmax, dual_objective, mean_kl, softmax_weights_weighted,
    solve_eta_dual, solve_eta_dual_weighted, DualSolution, StateSamples, ETA_MAX, ETA_MIN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Every sample gets weight 1 (imitation).
    Unit,
    /// `exp(Q/eta)` divided by its prior-weighted mean over the state's samples.
    SoftmaxZ,
    /// `min(exp((Q - E_pi Q)/eta), clip)`.
    AdvantageBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Temperature {
    Fixed(f64),
    /// Solved per batch so the improved sample distribution stays within
    /// `epsilon` KL of the prior.
    Dual { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementConfig {
    pub prior: PriorSpec,
    pub normalization: Normalization,
    pub temperature: Temperature,
    pub n_prior_samples: usize,
    pub weight_clip: Option<f64>,
    pub baseline: Baseline,
    /// Coefficient of `KL(pi || pi_target)` added to the loss.
    pub trust_region: Option<f64>,
}

impl ImprovementConfig {
    pub fn validate(&self) -> Result<()> {
        match self.temperature {
            Temperature::Fixed(eta) if !(eta > 0.0) => {
                return Err(Error::InvalidArgument(format!("temperature {eta} must be positive")))
            }
            Temperature::Dual { epsilon } if !(epsilon > 0.0) => {
                return Err(Error::InvalidArgument(format!("KL bound {epsilon} must be positive")))
            }
            _ => {}
        }
        if self.n_prior_samples == 0 {
            return Err(Error::InvalidArgument("n_prior_samples must be positive".into()));
        }
        if let Some(c) = self.weight_clip {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument(format!("weight clip {c}")));
            }
        }
        Ok(())
    }

    fn single_logged(&self) -> bool {
        self.prior.components() == [(1.0, PriorComponent::LoggedBehavior)]
    }
}

/// One fitted candidate action.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub state: Observation,
    pub action: Action,
    pub weight: f64,
    /// Prior mass of the sample within its state.
    pub coef: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementOutcome {
    pub report: GradientReport,
    pub eta: f64,
    /// Mean KL of the reweighted samples against the prior samples.
    pub sample_kl: f64,
    pub samples: Vec<WeightedSample>,
}

/// Random streams consumed by one improvement step.
#[derive(Debug, Clone)]
pub struct ImprovementStreams {
    pub components: RandomStream,
    pub samples: RandomStream,
    pub baseline: RandomStream,
}

impl ImprovementStreams {
    pub fn new(seed: u64) -> Self {
        use crate::domain::stream_ids::*;
        Self {
            components: RandomStream::new(seed, PRIOR_COMPONENTS),
            samples: RandomStream::new(seed, PRIOR_SAMPLES),
            baseline: RandomStream::new(seed, CRITIC_SAMPLES),
        }
    }
}

/// Evaluates candidate actions; implemented by critics and exact tables.
pub trait ActionValues {
    fn q(&self, state: &Observation, action: &Action) -> f64;
    /// `E_{a ~ policy}[Q(s, a)]`.
    fn baseline(&self, state: &Observation, policy: &ParametricPolicy, mode: Baseline, rng: &mut RandomStream) -> Result<f64>;
}

impl ActionValues for CriticLearner {
    fn q(&self, state: &Observation, action: &Action) -> f64 {
        CriticLearner::q(self, state, action)
    }

    fn baseline(&self, state: &Observation, policy: &ParametricPolicy, mode: Baseline, rng: &mut RandomStream) -> Result<f64> {
        CriticLearner::baseline(self, state, policy, mode, rng).map(|(b, _)| b)
    }
}

/// Builds the weighted candidate sets for a batch without touching the
/// policy parameters.
pub fn weighted_samples<Q, T>(
    config: &ImprovementConfig,
    batch: &[&Transition],
    policy: &ParametricPolicy,
    teacher: Option<&T>,
    critic: Option<&Q>,
    eta_override: Option<f64>,
    streams: &mut ImprovementStreams,
) -> Result<(Vec<Vec<WeightedSample>>, f64, f64)>
where
    Q: ActionValues + ?Sized,
    T: StochasticPolicy + ?Sized,
{
    config.validate()?;
    let n = config.n_prior_samples;
    let mut groups: Vec<Vec<WeightedSample>> = Vec::with_capacity(batch.len());
    for t in batch {
        let mut group = Vec::new();
        if config.single_logged() {
            group.push(WeightedSample {
                state: t.state.clone(),
                action: t.action.clone(),
                weight: 1.0,
                coef: 1.0,
                origin: Origin::Logged,
            });
        } else {
            let draws = draw_prior_actions(
                &config.prior,
                t,
                policy,
                teacher,
                n,
                &mut streams.components,
                &mut streams.samples,
            )?;
            // Repeated logged draws are one action; merge them with mass k/n.
            let logged = draws.iter().filter(|(_, o)| *o == Origin::Logged).count();
            if logged > 0 {
                group.push(WeightedSample {
                    state: t.state.clone(),
                    action: t.action.clone(),
                    weight: 1.0,
                    coef: logged as f64 / n as f64,
                    origin: Origin::Logged,
                });
            }
            for (action, origin) in draws.into_iter().filter(|(_, o)| *o != Origin::Logged) {
                group.push(WeightedSample {
                    state: t.state.clone(),
                    action,
                    weight: 1.0,
                    coef: 1.0 / n as f64,
                    origin,
                });
            }
        }
        groups.push(group);
    }

    let needs_critic = config.normalization != Normalization::Unit;
    let q_values: Vec<Vec<f64>> = if needs_critic {
        let critic = critic.ok_or_else(|| Error::InvalidArgument("weighting needs a critic".into()))?;
        groups
            .iter()
            .map(|g| g.iter().map(|s| critic.q(&s.state, &s.action)).collect())
            .collect()
    } else {
        Vec::new()
    };

    let mut eta = f64::NAN;
    let mut sample_kl = 0.0;
    match config.normalization {
        Normalization::Unit => {}
        Normalization::SoftmaxZ => {
            let states: Vec<StateSamples> = groups
                .iter()
                .zip(&q_values)
                .map(|(g, q)| StateSamples {
                    q: q.clone(),
                    coef: g.iter().map(|s| s.coef).collect(),
                })
                .collect();
            eta = match (eta_override, config.temperature) {
                (Some(e), _) | (None, Temperature::Fixed(e)) => e,
                (None, Temperature::Dual { epsilon }) => solve_eta_dual_weighted(&states, epsilon)?.eta,
            };
            sample_kl = mean_kl(&states, eta);
            for (g, s) in groups.iter_mut().zip(&states) {
                for (ws, w) in g.iter_mut().zip(softmax_weights_weighted(&s.q, &s.coef, eta)) {
                    ws.weight = w;
                }
            }
        }
        Normalization::AdvantageBaseline => {
            let critic = critic.expect("checked above");
            eta = match (eta_override, config.temperature) {
                (Some(e), _) | (None, Temperature::Fixed(e)) => e,
                (None, Temperature::Dual { .. }) => {
                    return Err(Error::InvalidArgument("advantage weighting needs a fixed temperature".into()))
                }
            };
            for (g, q) in groups.iter_mut().zip(&q_values) {
                let b = critic.baseline(&g[0].state, policy, config.baseline, &mut streams.baseline)?;
                let adv: Vec<f64> = q.iter().map(|q| q - b).collect();
                for (ws, w) in g.iter_mut().zip(compute_weights_advantage(&adv, eta, config.weight_clip)) {
                    ws.weight = w;
                }
            }
        }
    }
    Ok((groups, eta, sample_kl))
}

/// Owns the student policy, its optimizer and the trust-region anchor.
#[derive(Debug, Clone)]
pub struct ActorLearner {
    policy: ParametricPolicy,
    anchor: ParametricPolicy,
    optimizer: Adam,
    anchor_period: u64,
    updates: u64,
}

impl ActorLearner {
    pub fn new(policy: ParametricPolicy, optimizer: AdamConfig, anchor_period: u64) -> Self {
        Self {
            optimizer: Adam::new(optimizer, policy.param_count()),
            anchor: policy.clone(),
            policy,
            anchor_period: anchor_period.max(1),
            updates: 0,
        }
    }

    pub fn policy(&self) -> &ParametricPolicy {
        &self.policy
    }

    pub fn into_policy(self) -> ParametricPolicy {
        self.policy
    }

    pub fn anchor(&self) -> &ParametricPolicy {
        &self.anchor
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Loss and gradient of one improvement step, without applying it.
    pub fn gradient<Q, T>(
        &self,
        config: &ImprovementConfig,
        batch: &[&Transition],
        teacher: Option<&T>,
        critic: Option<&Q>,
        eta_override: Option<f64>,
        streams: &mut ImprovementStreams,
    ) -> Result<ImprovementOutcome>
    where
        Q: ActionValues + ?Sized,
        T: StochasticPolicy + ?Sized,
    {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty actor batch".into()));
        }
        let (groups, eta, sample_kl) =
            weighted_samples(config, batch, &self.policy, teacher, critic, eta_override, streams)?;
        let fit: Vec<FitGroup<'_>> = groups
            .iter()
            .map(|g| FitGroup {
                state: &g[0].state,
                targets: g.iter().map(|s| (s.action.clone(), s.coef * s.weight)).collect(),
            })
            .collect();
        let mut report = self.policy.grouped_nll_gradient(&fit);
        if let Some(coef) = config.trust_region {
            let states: Vec<&Observation> = batch.iter().map(|t| &t.state).collect();
            report.accumulate(&self.policy.kl_penalty_gradient(&self.anchor, &states, coef));
        }
        Ok(ImprovementOutcome {
            report,
            eta,
            sample_kl,
            samples: groups.into_iter().flatten().collect(),
        })
    }

    pub fn apply(&mut self, report: &GradientReport) -> Result<()> {
        if !report.is_finite() {
            return Err(Error::NumericDivergence {
                step: self.updates,
                detail: format!("actor loss {}", report.loss),
            });
        }
        self.optimizer.step(&mut self.policy.params, report);
        self.updates += 1;
        if self.updates % self.anchor_period == 0 {
            self.anchor.params.clone_from(&self.policy.params);
        }
        Ok(())
    }

    /// One full improvement step: draw, weight, fit.
    pub fn improvement_step<Q, T>(
        &mut self,
        config: &ImprovementConfig,
        batch: &[&Transition],
        teacher: Option<&T>,
        critic: Option<&Q>,
        eta_override: Option<f64>,
        streams: &mut ImprovementStreams,
    ) -> Result<ImprovementOutcome>
    where
        Q: ActionValues + ?Sized,
        T: StochasticPolicy + ?Sized,
    {
        let outcome = self.gradient(config, batch, teacher, critic, eta_override, streams)?;
        self.apply(&outcome.report)?;
        Ok(outcome)
    }
}
