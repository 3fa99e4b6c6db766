use serde::{Deserialize, Serialize};

use crate::actor::{ImprovementConfig, Normalization, PriorComponent, PriorSpec, Temperature};
use crate::critic::Baseline;
use crate::{Error, Result};

pub const DEFAULT_CRR_ETA: f64 = 0.1;
pub const DEFAULT_MPO_EPSILON: f64 = 0.1;
pub const DEFAULT_PRIOR_SAMPLES: usize = 10;
pub const DEFAULT_WEIGHT_CLIP: f64 = 20.0;
pub const DEFAULT_TRUST_REGION: f64 = 1e-2;
pub const DEFAULT_RCRR_BETA: f64 = 0.75;
pub const DEFAULT_RMPO_BETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodName {
    #[serde(rename = "BC")]
    Bc,
    #[serde(rename = "CRR")]
    Crr,
    #[serde(rename = "CRR-mixed")]
    CrrMixed,
    #[serde(rename = "AWAC")]
    Awac,
    #[serde(rename = "DAgger")]
    Dagger,
    #[serde(rename = "DAgger-mixed")]
    DaggerMixed,
    #[serde(rename = "MPO")]
    Mpo,
    #[serde(rename = "R-MPO")]
    RMpo,
    #[serde(rename = "R-CRR")]
    RCrr,
    #[serde(rename = "R-CRR-target")]
    RCrrTarget,
}

impl MethodName {
    pub const ALL: [MethodName; 10] = [
        MethodName::Bc,
        MethodName::Crr,
        MethodName::CrrMixed,
        MethodName::Awac,
        MethodName::Dagger,
        MethodName::DaggerMixed,
        MethodName::Mpo,
        MethodName::RMpo,
        MethodName::RCrr,
        MethodName::RCrrTarget,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Bc => "BC",
            MethodName::Crr => "CRR",
            MethodName::CrrMixed => "CRR-mixed",
            MethodName::Awac => "AWAC",
            MethodName::Dagger => "DAgger",
            MethodName::DaggerMixed => "DAgger-mixed",
            MethodName::Mpo => "MPO",
            MethodName::RMpo => "R-MPO",
            MethodName::RCrr => "R-CRR",
            MethodName::RCrrTarget => "R-CRR-target",
        }
    }

    /// Methods that draw candidate actions from the teacher or learn from
    /// its data.
    pub fn uses_teacher(self) -> bool {
        self != MethodName::Mpo
    }

    /// Methods whose prior mixes in the teacher with weight `beta`.
    pub fn has_beta(self) -> bool {
        matches!(self, MethodName::RMpo | MethodName::RCrr | MethodName::RCrrTarget)
    }
}

impl std::fmt::Display for MethodName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodName::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Which stores feed the batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSources {
    pub dataset: bool,
    pub replay: bool,
}

impl DataSources {
    pub const DATASET: Self = Self {
        dataset: true,
        replay: false,
    };
    pub const REPLAY: Self = Self {
        dataset: false,
        replay: true,
    };
    pub const MIXED: Self = Self {
        dataset: true,
        replay: true,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub name: MethodName,
    pub data: DataSources,
    pub improvement: ImprovementConfig,
    pub uses_critic: bool,
    pub uses_shaped_reward: bool,
    /// Offline phase followed by a ramp towards replay data.
    pub awac_schedule: bool,
    pub beta: Option<f64>,
}

impl MethodConfig {
    /// Trains for a fixed number of gradient steps on the dataset alone.
    pub fn is_offline_only(&self) -> bool {
        !self.data.replay
    }

    /// Replaces the teacher weight of a mixture prior.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!("beta {beta} outside [0, 1]")));
        }
        self.improvement.prior = match self.name {
            MethodName::RMpo | MethodName::RCrrTarget => PriorSpec::policy_teacher(beta)?,
            MethodName::RCrr => PriorSpec::behavior_teacher(beta)?,
            other => return Err(Error::Config(format!("{other} has no teacher mixture weight"))),
        };
        self.beta = Some(beta);
        Ok(self)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::Config(format!("temperature {eta} must be positive")));
        }
        match self.improvement.temperature {
            Temperature::Fixed(_) => self.improvement.temperature = Temperature::Fixed(eta),
            Temperature::Dual { .. } => {
                return Err(Error::Config(format!("{} solves its temperature", self.name)))
            }
        }
        Ok(self)
    }
}

fn advantage(prior: PriorSpec, n: usize, baseline: Baseline) -> ImprovementConfig {
    ImprovementConfig {
        prior,
        normalization: Normalization::AdvantageBaseline,
        temperature: Temperature::Fixed(DEFAULT_CRR_ETA),
        n_prior_samples: n,
        weight_clip: Some(DEFAULT_WEIGHT_CLIP),
        baseline,
        trust_region: None,
    }
}

fn unit(prior: PriorSpec, n: usize) -> ImprovementConfig {
    ImprovementConfig {
        prior,
        normalization: Normalization::Unit,
        temperature: Temperature::Fixed(1.0),
        n_prior_samples: n,
        weight_clip: None,
        baseline: Baseline::Exact,
        trust_region: None,
    }
}

fn softmax(prior: PriorSpec) -> ImprovementConfig {
    ImprovementConfig {
        prior,
        normalization: Normalization::SoftmaxZ,
        temperature: Temperature::Dual {
            epsilon: DEFAULT_MPO_EPSILON,
        },
        n_prior_samples: DEFAULT_PRIOR_SAMPLES,
        weight_clip: None,
        baseline: Baseline::Exact,
        trust_region: Some(DEFAULT_TRUST_REGION),
    }
}

/// The canonical configuration of a method. `discrete` picks the exact
/// baseline for discrete actions and a sampled one otherwise.
pub fn build_method_for(name: MethodName, discrete: bool) -> MethodConfig {
    let baseline = if discrete {
        Baseline::Exact
    } else {
        Baseline::Samples(DEFAULT_PRIOR_SAMPLES)
    };
    let logged = PriorSpec::single(PriorComponent::LoggedBehavior);
    let teacher = PriorSpec::single(PriorComponent::Teacher);
    let n = DEFAULT_PRIOR_SAMPLES;
    let (data, improvement, uses_critic) = match name {
        MethodName::Bc => (DataSources::DATASET, unit(logged, 1), false),
        MethodName::Crr => (DataSources::DATASET, advantage(logged, 1, baseline), true),
        MethodName::CrrMixed | MethodName::Awac => (DataSources::MIXED, advantage(logged, 1, baseline), true),
        MethodName::Dagger => (DataSources::REPLAY, unit(teacher, n), false),
        MethodName::DaggerMixed => (DataSources::MIXED, unit(teacher, n), false),
        MethodName::Mpo => (
            DataSources::REPLAY,
            softmax(PriorSpec::single(PriorComponent::CurrentPolicy)),
            true,
        ),
        MethodName::RMpo => (
            DataSources::MIXED,
            softmax(PriorSpec::policy_teacher(DEFAULT_RMPO_BETA).expect("valid beta")),
            true,
        ),
        MethodName::RCrr => (
            DataSources::MIXED,
            advantage(PriorSpec::behavior_teacher(DEFAULT_RCRR_BETA).expect("valid beta"), n, baseline),
            true,
        ),
        MethodName::RCrrTarget => (
            DataSources::MIXED,
            advantage(PriorSpec::policy_teacher(DEFAULT_RCRR_BETA).expect("valid beta"), n, baseline),
            true,
        ),
    };
    let beta = match name {
        MethodName::RMpo => Some(DEFAULT_RMPO_BETA),
        MethodName::RCrr | MethodName::RCrrTarget => Some(DEFAULT_RCRR_BETA),
        _ => None,
    };
    MethodConfig {
        name,
        data,
        improvement,
        uses_critic,
        uses_shaped_reward: name == MethodName::Mpo,
        awac_schedule: name == MethodName::Awac,
        beta,
    }
}

/// [`build_method_for`] for discrete-action tasks.
pub fn build_method(name: &str) -> Result<MethodConfig> {
    Ok(build_method_for(name.parse()?, true))
}
