//! The continuous point-mass task: the scripted controller, a calibrated
//! teacher and a short R-CRR run with Gaussian MLP policies.

use policy_finetune::domain::{ActionSelection, RandomStream};
use policy_finetune::envs::{make_teacher, success_rate, CalibrationOptions, EnvConfig, TeacherPolicy, TeacherTier};
use policy_finetune::trainer::{train, MethodName, RunConfig};

fn main() -> policy_finetune::Result<()> {
    let env = EnvConfig::point();
    let mut e = env.build()?;
    let controller = TeacherPolicy::point(0.0)?;
    let mut resets = RandomStream::new(0, 1);
    let mut actions = RandomStream::new(0, 2);
    let base = success_rate(&mut e, &controller, ActionSelection::Mode, 200, &mut resets, &mut actions)?;
    println!("scripted controller: {base:.3}");

    let opts = CalibrationOptions {
        rollouts: 400,
        ..CalibrationOptions::default()
    };
    let teacher = make_teacher(&env, TeacherTier::Generalization, 0.4, &opts)?;
    println!("generalization teacher epsilon {:.3}", teacher.epsilon());

    let mut cfg = RunConfig::new(MethodName::RCrr, TeacherTier::Generalization, 60, 30, 0);
    cfg.env = env;
    cfg.teacher_epsilon = Some(teacher.epsilon());
    cfg.hyper.offline_steps = 1_000;
    cfg.hyper.eval_episodes = 100;
    cfg.hyper.curve_episodes = 20;
    cfg.hyper.curve_points = 4;
    let out = train(&cfg)?;
    println!(
        "R-CRR after {} gradient steps: success {:.3} ({} env steps)",
        out.stats.gradient_steps, out.eval.success_rate, out.stats.env_steps
    );
    Ok(())
}
