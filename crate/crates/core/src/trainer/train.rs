use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::eval::{evaluate, EvalReport};
use super::methods::MethodConfig;
use crate::actor::{ActorLearner, ImprovementStreams, Origin};
use crate::approx::{AdamConfig, Checkpoint, ParametricPolicy, QApproximator, QHead};
use crate::critic::{CriticConfig, CriticLearner};
use crate::datastore::{sample_batch, AwacSchedule, BatchRatio, OfflineDataset, ReplayBuffer};
use crate::domain::{stream_ids, BudgetLedger, EpisodeSource, RandomStream, StochasticPolicy, Transition};
use crate::envs::{
    make_teacher, CalibrationOptions, EnvKind, Environment, GridObservation, ShapingWeights, TeacherPolicy,
    GRID_FEATURE_DIM, GRID_N_ACTIONS, GRID_STATES, POINT_ACTION_DIM, POINT_FEATURE_DIM,
};
use crate::{Error, Result};

/// One learning-curve point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub gradient_step: u64,
    pub episodes_offline_used: u64,
    pub episodes_online_used: u64,
    /// Deterministic (mode) success over fresh evaluation episodes.
    pub success_rate: f64,
    /// Stochastic success over the most recent online episodes.
    pub online_window_success: Option<f64>,
    pub actor_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    pub eta: Option<f64>,
}

/// What the training loop actually touched.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainStats {
    pub gradient_steps: u64,
    pub env_steps: u64,
    pub online_successes: u64,
    pub dataset_samples: u64,
    pub replay_samples: u64,
    pub logged_actions: u64,
    pub policy_actions: u64,
    pub teacher_actions: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: ParametricPolicy,
    /// Final policy in checkpoint format.
    pub checkpoint: Vec<u8>,
    pub eval: EvalReport,
    pub log: Vec<LogRow>,
    pub stats: TrainStats,
    pub ledger: BudgetLedger,
    pub teacher_epsilon: f64,
}

/// The calibrated teacher for a run, or the configured degradation.
pub fn resolve_teacher(cfg: &RunConfig) -> Result<TeacherPolicy> {
    let opts = CalibrationOptions {
        gamma: cfg.hyper.gamma,
        ..CalibrationOptions::default()
    };
    match cfg.teacher_epsilon {
        Some(eps) => {
            let base = make_teacher(&cfg.env, cfg.teacher, 1.0, &opts)?;
            base.with_epsilon(eps)
        }
        None => make_teacher(&cfg.env, cfg.teacher, cfg.teacher_target(), &opts),
    }
}

/// Loads the configured dataset (truncated to the run's offline episodes) or
/// collects one with the run seed.
pub fn prepare_dataset(cfg: &RunConfig, teacher: &TeacherPolicy) -> Result<Option<OfflineDataset>> {
    if cfg.offline_episodes == 0 {
        return Ok(None);
    }
    let n = cfg.offline_episodes as usize;
    let data = match &cfg.dataset {
        Some(path) => {
            let d = OfflineDataset::load(path)?;
            if d.meta().env_id != cfg.env.kind.id() {
                return Err(Error::Config(format!(
                    "dataset {} is for env `{}`",
                    path.display(),
                    d.meta().env_id
                )));
            }
            if d.len() < n {
                return Err(Error::Config(format!(
                    "dataset {} holds {} episodes, run needs {n}",
                    path.display(),
                    d.len()
                )));
            }
            if d.len() == n {
                d
            } else {
                d.prefix(n)?
            }
        }
        None => {
            let mut env = cfg.env.build()?;
            OfflineDataset::collect(&mut env, teacher, cfg.teacher.name(), n, cfg.deterministic_dataset, cfg.seed)?
        }
    };
    Ok(Some(data))
}

pub fn build_policy(cfg: &RunConfig, rng: &mut RandomStream) -> ParametricPolicy {
    let h = &cfg.hyper.hidden;
    match (cfg.env.kind, cfg.env.grid_observation) {
        (EnvKind::Grid, GridObservation::Index) => ParametricPolicy::tabular_categorical(GRID_STATES, GRID_N_ACTIONS),
        (EnvKind::Grid, GridObservation::Features) => {
            ParametricPolicy::mlp_categorical(GRID_FEATURE_DIM, h, GRID_N_ACTIONS, rng)
        }
        (EnvKind::Point, _) => ParametricPolicy::mlp_gaussian(POINT_FEATURE_DIM, h, POINT_ACTION_DIM, rng),
    }
}

/// Scalar head on the grid, distributional head on the point task.
pub fn build_q(cfg: &RunConfig, shaped: bool, rng: &mut RandomStream) -> QApproximator {
    let h = &cfg.hyper.hidden;
    match (cfg.env.kind, cfg.env.grid_observation) {
        (EnvKind::Grid, GridObservation::Index) => QApproximator::tabular(GRID_STATES, GRID_N_ACTIONS, QHead::Scalar),
        (EnvKind::Grid, GridObservation::Features) => {
            QApproximator::mlp_per_action(GRID_FEATURE_DIM, h, GRID_N_ACTIONS, QHead::Scalar, rng)
        }
        (EnvKind::Point, _) => {
            // Shaped returns leave [0, 1]; widen the support to cover them.
            let head = if shaped {
                QHead::Distributional {
                    atoms: 51,
                    v_min: -0.5,
                    v_max: 2.5,
                }
            } else {
                QHead::distributional_default()
            };
            QApproximator::mlp_state_action(POINT_FEATURE_DIM, POINT_ACTION_DIM, h, head, rng)
        }
    }
}

#[derive(Debug, Default)]
struct Running {
    actor: f64,
    critic: f64,
    eta: f64,
    n: u64,
    n_eta: u64,
}

impl Running {
    fn take(&mut self, with_critic: bool) -> (Option<f64>, Option<f64>, Option<f64>) {
        let out = if self.n == 0 {
            (None, None, None)
        } else {
            (
                Some(self.actor / self.n as f64),
                with_critic.then(|| self.critic / self.n as f64),
                (self.n_eta > 0).then(|| self.eta / self.n_eta as f64),
            )
        };
        *self = Running::default();
        out
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    method: MethodConfig,
    ratio: BatchRatio,
    env: Box<dyn Environment>,
    eval_env: Box<dyn Environment>,
    teacher: &'a TeacherPolicy,
    dataset: Option<&'a OfflineDataset>,
    replay: ReplayBuffer,
    actor: ActorLearner,
    critic: Option<CriticLearner>,
    schedule: Option<AwacSchedule>,
    ledger: BudgetLedger,
    reset_rng: RandomStream,
    action_rng: RandomStream,
    batch_rng: RandomStream,
    critic_rng: RandomStream,
    improve: ImprovementStreams,
    timesteps: u64,
    window: VecDeque<bool>,
    running: Running,
    stats: TrainStats,
    log: Vec<LogRow>,
}

impl Run<'_> {
    fn current_ratio(&self) -> (BatchRatio, Option<f64>) {
        let total = self.ratio.total();
        let has_data = self.dataset.is_some_and(|d| d.n_transitions() > 0);
        let has_replay = !self.replay.is_empty();
        if !self.method.data.replay || !has_replay {
            return (BatchRatio::new(total, 0), self.schedule.map(|s| s.at(self.stats.gradient_steps).1));
        }
        if !self.method.data.dataset || !has_data {
            return (BatchRatio::new(0, total), self.schedule.map(|s| s.at(self.stats.gradient_steps).1));
        }
        match self.schedule {
            Some(s) => {
                let (fraction, temperature) = s.at(self.stats.gradient_steps);
                (BatchRatio::from_fraction(total, fraction), Some(temperature))
            }
            None => (self.ratio, None),
        }
    }

    fn gradient_step(&mut self) -> Result<()> {
        let (ratio, eta_override) = self.current_ratio();
        let batch = sample_batch(ratio, self.dataset, Some(&self.replay), &mut self.batch_rng)?;
        self.stats.dataset_samples += batch.from_dataset as u64;
        self.stats.replay_samples += batch.from_replay as u64;
        let step = self.stats.gradient_steps;
        if let Some(critic) = &mut self.critic {
            let r = critic
                .td_update(&batch.transitions, self.actor.policy(), &mut self.critic_rng)
                .map_err(|e| match e {
                    Error::NumericDivergence { detail, .. } => Error::NumericDivergence { step, detail },
                    other => other,
                })?;
            self.running.critic += r.loss;
        }
        let out = self
            .actor
            .improvement_step(
                &self.method.improvement,
                &batch.transitions,
                Some(self.teacher),
                self.critic.as_ref(),
                eta_override,
                &mut self.improve,
            )
            .map_err(|e| match e {
                Error::NumericDivergence { detail, .. } => Error::NumericDivergence { step, detail },
                other => other,
            })?;
        for s in &out.samples {
            match s.origin {
                Origin::Logged => self.stats.logged_actions += 1,
                Origin::PolicySample => self.stats.policy_actions += 1,
                Origin::TeacherSample => self.stats.teacher_actions += 1,
            }
        }
        self.running.actor += out.report.loss;
        self.running.n += 1;
        if out.eta.is_finite() {
            self.running.eta += out.eta;
            self.running.n_eta += 1;
        }
        self.stats.gradient_steps += 1;
        Ok(())
    }

    fn online_episode(&mut self) -> Result<()> {
        self.ledger.consume(EpisodeSource::StudentOnline, 1)?;
        let mut obs = self.env.reset(&mut self.reset_rng);
        let success = loop {
            let action = self.actor.policy().sample(&obs, &mut self.action_rng);
            let behavior_log_density = self.actor.policy().log_density(&obs, &action);
            let out = self.env.step(&action)?;
            let done = out.done();
            let terminal = out.terminal;
            self.replay.push(Transition {
                state: obs,
                action,
                reward: out.reward,
                next_state: out.observation.clone(),
                terminal,
                behavior_log_density,
            });
            obs = out.observation;
            self.stats.env_steps += 1;
            self.timesteps += 1;
            if self.timesteps % self.cfg.hyper.timesteps_per_update == 0 {
                self.gradient_step()?;
            }
            if done {
                break terminal;
            }
        };
        if success {
            self.stats.online_successes += 1;
        }
        self.window.push_back(success);
        if self.window.len() > self.cfg.hyper.online_window {
            self.window.pop_front();
        }
        Ok(())
    }

    fn checkpoint_row(&mut self) -> Result<()> {
        let k = self.log.len() as u64 + 1;
        let mut stream = RandomStream::new(self.cfg.seed, stream_ids::EVAL_BASE + k);
        let eval = evaluate(&mut self.eval_env, self.actor.policy(), self.cfg.hyper.curve_episodes.max(1), &mut stream)?;
        let (actor_loss, critic_loss, eta) = self.running.take(self.critic.is_some());
        let window = (!self.window.is_empty())
            .then(|| self.window.iter().filter(|s| **s).count() as f64 / self.window.len() as f64);
        self.log.push(LogRow {
            gradient_step: self.stats.gradient_steps,
            episodes_offline_used: self.ledger.offline_used(),
            episodes_online_used: self.ledger.online_used(),
            success_rate: eval.success_rate,
            online_window_success: window,
            actor_loss,
            critic_loss,
            eta,
        });
        Ok(())
    }

    fn offline_phase(&mut self, steps: u64) -> Result<()> {
        let points = self.cfg.hyper.curve_points as u64;
        let start = self.stats.gradient_steps;
        let mut next = 1;
        for i in 1..=steps {
            self.gradient_step()?;
            if self.cfg.hyper.curve_episodes > 0 && next <= points && i * points >= next * steps {
                self.checkpoint_row()?;
                next += 1;
            }
        }
        debug_assert_eq!(self.stats.gradient_steps, start + steps);
        Ok(())
    }

    fn online_phase(&mut self) -> Result<()> {
        let budget = self.ledger.remaining();
        let points = self.cfg.hyper.curve_points as u64;
        let mut next = 1;
        let mut done = 0;
        while !self.ledger.is_exhausted() {
            self.online_episode()?;
            done += 1;
            if self.cfg.hyper.curve_episodes > 0 && next <= points && done * points >= next * budget {
                self.checkpoint_row()?;
                next += 1;
            }
        }
        Ok(())
    }
}

/// Trains with a calibrated teacher and (optionally) a dataset, collecting
/// both when needed.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let teacher = resolve_teacher(cfg)?;
    let dataset = prepare_dataset(cfg, &teacher)?;
    train_with(cfg, &teacher, dataset.as_ref())
}

/// Trains against a given teacher and dataset. The dataset must hold exactly
/// `cfg.offline_episodes` episodes.
pub fn train_with(cfg: &RunConfig, teacher: &TeacherPolicy, dataset: Option<&OfflineDataset>) -> Result<TrainOutcome> {
    cfg.validate()?;
    let method = cfg.method_config()?;
    let n_offline = dataset.map_or(0, |d| d.len() as u64);
    if n_offline != cfg.offline_episodes {
        return Err(Error::Config(format!(
            "dataset holds {n_offline} episodes, config declares {}",
            cfg.offline_episodes
        )));
    }
    let mut ledger = BudgetLedger::new(cfg.budget);
    ledger.consume(EpisodeSource::TeacherOffline, n_offline)?;

    let shaped = cfg.reward_shaping.unwrap_or(method.uses_shaped_reward);
    let env = if shaped {
        cfg.env.build_shaped(ShapingWeights::default())?
    } else {
        cfg.env.build()?
    };
    let mut init = RandomStream::new(cfg.seed, stream_ids::INIT);
    let policy = build_policy(cfg, &mut init);
    let tabular = cfg.tabular();
    let critic = if method.uses_critic {
        let q = build_q(cfg, shaped, &mut init);
        Some(CriticLearner::new(
            q,
            CriticConfig {
                gamma: cfg.hyper.gamma,
                target_period: cfg.hyper.target_period,
                optimizer: AdamConfig::with_lr(cfg.hyper.critic_lr(tabular)),
                ..CriticConfig::default()
            },
        )?)
    } else {
        None
    };
    let actor = ActorLearner::new(
        policy,
        AdamConfig::with_lr(cfg.hyper.actor_lr(tabular)),
        cfg.hyper.target_period,
    );
    let online_budget = cfg.budget - n_offline;
    let horizon = env.spec().horizon as u64;
    let capacity = cfg
        .hyper
        .replay_capacity
        .unwrap_or(((online_budget * horizon) as usize).max(1));
    let offline_steps = cfg.hyper.offline_steps;
    let schedule = if method.awac_schedule && n_offline > 0 {
        Some(AwacSchedule::from_total_steps(offline_steps.max(3))?)
    } else {
        None
    };

    let mut run = Run {
        cfg,
        ratio: cfg.ratio()?,
        method,
        eval_env: cfg.env.build()?,
        env,
        teacher,
        dataset,
        replay: ReplayBuffer::new(capacity),
        actor,
        critic,
        schedule,
        ledger,
        reset_rng: RandomStream::new(cfg.seed, stream_ids::ENV_RESET),
        action_rng: RandomStream::new(cfg.seed, stream_ids::POLICY_ACTIONS),
        batch_rng: RandomStream::new(cfg.seed, stream_ids::BATCH_SAMPLING),
        critic_rng: RandomStream::new(cfg.seed, stream_ids::CRITIC_SAMPLES),
        improve: ImprovementStreams::new(cfg.seed),
        timesteps: 0,
        window: VecDeque::new(),
        running: Running::default(),
        stats: TrainStats::default(),
        log: Vec::new(),
    };
    // The improvement baseline stream must differ from the critic's.
    run.improve.baseline = RandomStream::new(cfg.seed, stream_ids::CRITIC_SAMPLES + 100);

    if run.method.is_offline_only() || online_budget == 0 {
        run.offline_phase(offline_steps)?;
    } else {
        if let Some(s) = run.schedule {
            run.offline_phase(s.t_pure_offline)?;
        }
        run.online_phase()?;
    }

    let mut final_stream = RandomStream::new(cfg.seed, stream_ids::EVAL_BASE);
    let Run {
        mut eval_env,
        actor,
        stats,
        log,
        ledger,
        ..
    } = run;
    let policy = actor.into_policy();
    let eval = evaluate(&mut eval_env, &policy, cfg.hyper.eval_episodes, &mut final_stream)?;
    let checkpoint = Checkpoint::from(&policy).to_bytes();
    Ok(TrainOutcome {
        policy,
        checkpoint,
        eval,
        log,
        stats,
        ledger,
        teacher_epsilon: teacher.epsilon(),
    })
}

pub fn write_log(path: &Path, rows: &[LogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
