use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::grid::{GridStackEnv, GRID_N_ACTIONS};
use super::point::{PointController, POINT_ACTION_DIM};
use super::solve::GridOracle;
use super::{success_rate, EnvConfig, EnvKind};
use crate::domain::{stream_ids, Action, ActionSelection, Observation, RandomStream, StochasticPolicy};
use crate::{Error, Result};

/// Gaussian noise of the continuous base controller.
const POINT_BASE_STD: f64 = 0.1;
/// Density of the uniform component on `[-1, 1]^3`.
const POINT_UNIFORM_DENSITY: f64 = 1.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeacherTier {
    Mastery,
    Generalization,
}

impl TeacherTier {
    /// Default calibration target.
    pub fn default_success(self) -> f64 {
        match self {
            TeacherTier::Mastery => 0.80,
            TeacherTier::Generalization => 0.40,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TeacherTier::Mastery => "mastery",
            TeacherTier::Generalization => "generalization",
        }
    }
}

impl std::str::FromStr for TeacherTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mastery" => Ok(TeacherTier::Mastery),
            "generalization" => Ok(TeacherTier::Generalization),
            other => Err(Error::Config(format!("unknown teacher tier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum BaseController {
    /// Value-iteration greedy policy.
    Grid(Arc<GridOracle>),
    /// Proportional controller with Gaussian action noise.
    Point(PointController),
}

/// A suboptimal teacher: the base controller mixed with uniform noise,
/// `pi = (1 - eps) * base + eps * uniform`. Queryable at any state.
#[derive(Debug, Clone)]
pub struct TeacherPolicy {
    base: BaseController,
    epsilon: f64,
}

impl TeacherPolicy {
    pub fn new(base: BaseController, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(Self { base, epsilon })
    }

    pub fn grid(oracle: Arc<GridOracle>, epsilon: f64) -> Result<Self> {
        Self::new(BaseController::Grid(oracle), epsilon)
    }

    pub fn point(epsilon: f64) -> Result<Self> {
        Self::new(BaseController::Point(PointController), epsilon)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn base(&self) -> &BaseController {
        &self.base
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.base.clone(), epsilon)
    }

    fn grid_greedy(oracle: &GridOracle, obs: &Observation) -> usize {
        GridStackEnv::decode(obs)
            .map(|s| oracle.greedy_action(&s))
            .unwrap_or(0)
    }

    /// Action probabilities for the discrete task.
    pub fn probabilities(&self, obs: &Observation) -> Option<[f64; GRID_N_ACTIONS]> {
        match &self.base {
            BaseController::Grid(oracle) => {
                let greedy = Self::grid_greedy(oracle, obs);
                let mut p = [self.epsilon / GRID_N_ACTIONS as f64; GRID_N_ACTIONS];
                p[greedy] += 1.0 - self.epsilon;
                Some(p)
            }
            BaseController::Point(_) => None,
        }
    }
}

fn gaussian_log_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

impl StochasticPolicy for TeacherPolicy {
    fn action_probs(&self, obs: &Observation) -> Option<Vec<f64>> {
        self.probabilities(obs).map(|p| p.to_vec())
    }

    fn sample(&self, obs: &Observation, rng: &mut RandomStream) -> Action {
        // Every branch consumes the same draws, so teachers that differ only in
        // epsilon stay coupled under a shared stream.
        let u = rng.uniform();
        match &self.base {
            BaseController::Grid(oracle) => {
                let uniform_action = rng.below(GRID_N_ACTIONS);
                if u < self.epsilon {
                    Action::Discrete(uniform_action)
                } else {
                    Action::Discrete(Self::grid_greedy(oracle, obs))
                }
            }
            BaseController::Point(ctrl) => {
                let uniform: Vec<f64> = (0..POINT_ACTION_DIM)
                    .map(|_| 2.0 * rng.uniform() - 1.0)
                    .collect();
                let noise: Vec<f64> = (0..POINT_ACTION_DIM)
                    .map(|_| StandardNormal.sample(rng))
                    .collect();
                if u < self.epsilon {
                    Action::Continuous(uniform)
                } else {
                    let mean = ctrl.action(obs);
                    Action::continuous_clipped(
                        mean.iter().zip(&noise).map(|(m, n)| m + POINT_BASE_STD * n),
                    )
                }
            }
        }
    }

    fn mode(&self, obs: &Observation) -> Action {
        match &self.base {
            BaseController::Grid(oracle) => Action::Discrete(Self::grid_greedy(oracle, obs)),
            BaseController::Point(ctrl) => Action::continuous_clipped(ctrl.action(obs)),
        }
    }

    fn log_density(&self, obs: &Observation, action: &Action) -> f64 {
        match (&self.base, action) {
            (BaseController::Grid(_), Action::Discrete(a)) => self
                .probabilities(obs)
                .and_then(|p| p.get(*a).copied())
                .map(f64::ln)
                .unwrap_or(f64::NEG_INFINITY),
            (BaseController::Point(ctrl), Action::Continuous(v)) => {
                let mean = ctrl.action(obs);
                let log_gauss: f64 = v
                    .iter()
                    .zip(&mean)
                    .map(|(x, m)| gaussian_log_pdf(*x, *m, POINT_BASE_STD))
                    .sum();
                let in_box = v.iter().all(|x| (-1.0..=1.0).contains(x));
                let uniform = if in_box { POINT_UNIFORM_DENSITY } else { 0.0 };
                ((1.0 - self.epsilon) * log_gauss.exp() + self.epsilon * uniform).ln()
            }
            _ => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    /// Stochastic rollouts per success-rate measurement.
    pub rollouts: usize,
    pub max_iterations: usize,
    /// Accepted distance between measured and target success.
    pub tolerance: f64,
    /// Bisection stops early once this close.
    pub early_stop: f64,
    /// Discount for the grid value-iteration base policy.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            rollouts: 2000,
            max_iterations: 30,
            tolerance: 0.03,
            early_stop: 0.005,
            gamma: 0.98,
            seed: 0,
        }
    }
}

fn base_teacher(env: &EnvConfig, gamma: f64) -> Result<TeacherPolicy> {
    match env.kind {
        EnvKind::Grid => TeacherPolicy::grid(Arc::new(GridOracle::new(gamma)?), 0.0),
        EnvKind::Point => TeacherPolicy::point(0.0),
    }
}

/// Measures the stochastic success rate of `teacher` on fresh layouts drawn
/// from `(seed, stream)`.
pub fn measure_teacher(
    env: &EnvConfig,
    teacher: &TeacherPolicy,
    rollouts: usize,
    seed: u64,
) -> Result<f64> {
    let mut e = env.build()?;
    let mut resets = RandomStream::new(seed, stream_ids::CALIBRATION);
    let mut actions = RandomStream::new(seed, stream_ids::TEACHER_SAMPLES);
    success_rate(
        &mut e,
        teacher,
        ActionSelection::Sample,
        rollouts,
        &mut resets,
        &mut actions,
    )
}

/// Finds the degradation `eps` whose teacher succeeds at `target_success` by
/// bisection on the measured stochastic success rate.
///
/// All measurements share one pair of random streams, so the measured curve is
/// monotone up to the coupling of the mixture draws.
pub fn make_teacher(
    env: &EnvConfig,
    tier: TeacherTier,
    target_success: f64,
    opts: &CalibrationOptions,
) -> Result<TeacherPolicy> {
    if !(target_success > 0.0 && target_success <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target success {target_success} outside (0, 1] for {} teacher",
            tier.name()
        )));
    }
    let base = base_teacher(env, opts.gamma)?;
    if target_success >= 1.0 {
        return Ok(base);
    }
    let measure = |eps: f64| -> Result<f64> {
        measure_teacher(env, &base.with_epsilon(eps)?, opts.rollouts, opts.seed)
    };

    let at_zero = measure(0.0)?;
    if at_zero < target_success - opts.tolerance {
        return Err(Error::CalibrationFailed(format!(
            "base controller reaches only {at_zero:.3} < target {target_success:.3}"
        )));
    }
    if (at_zero - target_success).abs() <= opts.early_stop {
        return Ok(base);
    }
    let at_one = measure(1.0)?;
    if at_one > target_success + opts.tolerance {
        return Err(Error::CalibrationFailed(format!(
            "uniform policy already succeeds at {at_one:.3} > target {target_success:.3}"
        )));
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let rate = measure(mid)?;
        let err = (rate - target_success).abs();
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((mid, err));
        }
        if err <= opts.early_stop {
            break;
        }
        if rate > target_success {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    match best {
        Some((eps, err)) if err <= opts.tolerance => base.with_epsilon(eps),
        Some((eps, err)) => Err(Error::CalibrationFailed(format!(
            "closest epsilon {eps:.4} misses target {target_success:.3} by {err:.3}"
        ))),
        None => Err(Error::CalibrationFailed("no iterations run".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{GridState, RedSlot};

    fn grid_teacher(eps: f64) -> TeacherPolicy {
        TeacherPolicy::grid(Arc::new(GridOracle::new(0.98).unwrap()), eps).unwrap()
    }

    #[test]
    fn zero_epsilon_mode_is_greedy() {
        let t = grid_teacher(0.0);
        let oracle = GridOracle::new(0.98).unwrap();
        for idx in (0..crate::envs::GRID_STATES).step_by(37) {
            let s = GridState::from_global(idx);
            if !s.is_valid() {
                continue;
            }
            let obs = Observation::Index(idx);
            assert_eq!(t.mode(&obs), Action::Discrete(oracle.greedy_action(&s)));
            assert_eq!(t.sample(&obs, &mut RandomStream::new(0, 0)), t.mode(&obs));
        }
    }

    #[test]
    fn mode_has_highest_density() {
        let t = grid_teacher(0.3);
        let s = GridState {
            blue: 3,
            agent: 17,
            red: RedSlot::OnCell(9),
        };
        let obs = Observation::Index(s.global_index());
        let mode_ld = t.log_density(&obs, &t.mode(&obs));
        for a in 0..GRID_N_ACTIONS {
            assert!(mode_ld >= t.log_density(&obs, &Action::Discrete(a)));
        }
        let total: f64 = t.probabilities(&obs).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn target_one_returns_base() {
        let t = make_teacher(
            &EnvConfig::grid(),
            TeacherTier::Mastery,
            1.0,
            &CalibrationOptions::default(),
        )
        .unwrap();
        assert_eq!(t.epsilon(), 0.0);
    }

    #[test]
    fn rejects_bad_target() {
        let opts = CalibrationOptions::default();
        assert!(make_teacher(&EnvConfig::grid(), TeacherTier::Mastery, 0.0, &opts).is_err());
        assert!(make_teacher(&EnvConfig::grid(), TeacherTier::Mastery, 1.5, &opts).is_err());
    }

    #[test]
    fn point_teacher_density_is_finite_in_box() {
        let t = TeacherPolicy::point(0.2).unwrap();
        let obs = Observation::Features(vec![0.1, 0.1, 0.5, 0.5, 0.9, 0.9, 0.0, 0.0]);
        let mut rng = RandomStream::new(1, 1);
        for _ in 0..100 {
            let a = t.sample(&obs, &mut rng);
            assert!(t.log_density(&obs, &a).is_finite());
        }
    }
}
