//! Trains briefly, writes the policy checkpoint and evaluates the reloaded copy.

use policy_finetune::approx::{Checkpoint, ModelHeader, CHECKPOINT_MAGIC};
use policy_finetune::domain::{stream_ids, RandomStream};
use policy_finetune::envs::TeacherTier;
use policy_finetune::trainer::{evaluate, train, MethodName, RunConfig};

fn main() -> policy_finetune::Result<()> {
    let mut cfg = RunConfig::new(MethodName::Bc, TeacherTier::Generalization, 300, 300, 0);
    cfg.hyper.offline_steps = 5_000;
    cfg.hyper.eval_episodes = 300;
    let out = train(&cfg)?;

    let path = std::env::temp_dir().join("bc-policy.pfck");
    std::fs::write(&path, &out.checkpoint)?;
    let bytes = std::fs::read(&path)?;
    assert_eq!(&bytes[..4], CHECKPOINT_MAGIC);
    let ckpt = Checkpoint::from_bytes(&bytes)?;
    if let ModelHeader::Policy { trunk, head } = &ckpt.header {
        println!("policy checkpoint: {trunk:?}, {head:?}, {} parameters, {} bytes", ckpt.params.len(), bytes.len());
    }
    assert_eq!(ckpt.to_bytes(), bytes);

    let policy = ckpt.into_policy()?;
    let mut env = cfg.env.build()?;
    let mut stream = RandomStream::new(cfg.seed, stream_ids::EVAL_BASE);
    let report = evaluate(&mut env, &policy, cfg.hyper.eval_episodes, &mut stream)?;
    println!("trained {:.3}, reloaded {:.3}", out.eval.success_rate, report.success_rate);
    Ok(())
}
