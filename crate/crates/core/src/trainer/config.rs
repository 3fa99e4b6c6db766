use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::methods::{build_method_for, MethodConfig, MethodName};
use crate::datastore::BatchRatio;
use crate::envs::{EnvConfig, EnvKind, GridObservation, TeacherTier};
use crate::{Error, Result};

fn default_ratio() -> String {
    "32:32".into()
}

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub env: EnvConfig,
    pub method: MethodName,
    pub teacher: TeacherTier,
    /// Calibration target; the tier default when absent.
    #[serde(default)]
    pub teacher_success: Option<f64>,
    /// Skips calibration when the degradation is already known.
    #[serde(default)]
    pub teacher_epsilon: Option<f64>,
    /// Total episodes, offline plus online.
    pub budget: u64,
    #[serde(default)]
    pub offline_episodes: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Fixed temperature override for advantage-weighted methods.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_ratio")]
    pub batch_ratio: String,
    /// Dataset file; collected in-process with the run seed when absent.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub deterministic_dataset: bool,
    /// Overrides the method's shaped-reward default.
    #[serde(default)]
    pub reward_shaping: Option<bool>,
    #[serde(default)]
    pub hyper: Hyperparameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// Gradient steps for methods that train on the dataset alone. AWAC
    /// spends 45% of this on its offline phase.
    pub offline_steps: u64,
    pub timesteps_per_update: u64,
    /// Deterministic episodes in the final evaluation.
    pub eval_episodes: usize,
    /// Deterministic episodes per learning-curve point.
    pub curve_episodes: usize,
    /// Learning-curve points per run (every 5% by default).
    pub curve_points: usize,
    /// Online episodes in the stochastic success window.
    pub online_window: usize,
    pub actor_lr: Option<f64>,
    pub critic_lr: Option<f64>,
    pub gamma: f64,
    pub target_period: u64,
    pub hidden: Vec<usize>,
    /// Replay capacity; the full online budget when absent.
    pub replay_capacity: Option<usize>,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            offline_steps: 200_000,
            timesteps_per_update: 5,
            eval_episodes: 1000,
            curve_episodes: 200,
            curve_points: 20,
            online_window: 200,
            actor_lr: None,
            critic_lr: None,
            gamma: 0.98,
            target_period: 100,
            hidden: vec![64, 64],
            replay_capacity: None,
        }
    }
}

impl Hyperparameters {
    pub fn actor_lr(&self, tabular: bool) -> f64 {
        self.actor_lr.unwrap_or(if tabular { 0.03 } else { 1e-3 })
    }

    pub fn critic_lr(&self, tabular: bool) -> f64 {
        self.critic_lr.unwrap_or(if tabular { 0.03 } else { 1e-3 })
    }
}

impl RunConfig {
    pub fn new(method: MethodName, teacher: TeacherTier, budget: u64, offline_episodes: u64, seed: u64) -> Self {
        Self {
            env: EnvConfig::grid(),
            method,
            teacher,
            teacher_success: None,
            teacher_epsilon: None,
            budget,
            offline_episodes,
            seed,
            beta: None,
            eta: None,
            batch_ratio: default_ratio(),
            dataset: None,
            deterministic_dataset: false,
            reward_shaping: None,
            hyper: Hyperparameters::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn tabular(&self) -> bool {
        self.env.kind == EnvKind::Grid && self.env.grid_observation == GridObservation::Index
    }

    pub fn discrete(&self) -> bool {
        self.env.kind == EnvKind::Grid
    }

    pub fn ratio(&self) -> Result<BatchRatio> {
        self.batch_ratio.parse()
    }

    pub fn teacher_target(&self) -> f64 {
        self.teacher_success.unwrap_or(self.teacher.default_success())
    }

    pub fn shaped(&self) -> Result<bool> {
        Ok(self.reward_shaping.unwrap_or(self.method_config()?.uses_shaped_reward))
    }

    pub fn offline_fraction(&self) -> f64 {
        if self.budget == 0 {
            0.0
        } else {
            self.offline_episodes as f64 / self.budget as f64
        }
    }

    /// The method registry row with this run's overrides applied.
    pub fn method_config(&self) -> Result<MethodConfig> {
        let mut m = build_method_for(self.method, self.discrete());
        if let Some(beta) = self.beta {
            m = m.with_beta(beta)?;
        }
        if let Some(eta) = self.eta {
            m = m.with_eta(eta)?;
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.method_config()?;
        let ratio = self.ratio()?;
        if ratio.total() == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.offline_episodes > self.budget {
            return Err(Error::Config(format!(
                "offline episodes {} exceed budget {}",
                self.offline_episodes, self.budget
            )));
        }
        if !m.data.dataset && self.offline_episodes > 0 {
            return Err(Error::Config(format!("{} trains on online data only", self.method)));
        }
        if m.is_offline_only() && self.offline_episodes == 0 {
            return Err(Error::Config(format!("{} needs offline episodes", self.method)));
        }
        let h = &self.hyper;
        if h.timesteps_per_update == 0 || h.eval_episodes == 0 || h.curve_points == 0 {
            return Err(Error::Config("update rate and evaluation sizes must be positive".into()));
        }
        if m.is_offline_only() && h.offline_steps == 0 {
            return Err(Error::Config("offline_steps must be positive".into()));
        }
        if !(0.0..1.0).contains(&h.gamma) {
            return Err(Error::Config(format!("gamma {}", h.gamma)));
        }
        if let Some(eps) = self.teacher_epsilon {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::Config(format!("teacher epsilon {eps}")));
            }
        }
        if self.env.kind == EnvKind::Grid && self.env.grid_observation == GridObservation::Features && h.hidden.is_empty() {
            return Err(Error::Config("feature observations need hidden layers".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::new(MethodName::RCrr, TeacherTier::Generalization, 3000, 1500, 4);
        c.beta = Some(0.5);
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn minimal_toml() {
        let c = RunConfig::from_toml("method = \"CRR\"\nteacher = \"mastery\"\nbudget = 100\noffline_episodes = 100\n").unwrap();
        assert_eq!(c.ratio().unwrap(), BatchRatio::new(32, 32));
        assert_eq!(c.hyper.offline_steps, 200_000);
    }

    #[test]
    fn invalid_combinations() {
        let bad = [
            RunConfig::new(MethodName::Crr, TeacherTier::Mastery, 100, 0, 0),
            RunConfig::new(MethodName::Mpo, TeacherTier::Mastery, 100, 10, 0),
            RunConfig::new(MethodName::RCrr, TeacherTier::Mastery, 100, 200, 0),
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))));
        }
        assert!(RunConfig::from_toml("method = \"XYZ\"\nteacher = \"mastery\"\nbudget = 1\n").is_err());
        assert!(RunConfig::from_toml("method = \"BC\"\nteacher = \"mastery\"\nbudget = 1\nbogus = 1\n").is_err());
    }
}
