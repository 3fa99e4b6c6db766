//! Draws batches that mix an offline dataset with a replay buffer.

use policy_finetune::datastore::{sample_batch, BatchRatio, OfflineDataset, ReplayBuffer};
use policy_finetune::domain::{ActionSelection, EpisodeSource, RandomStream};
use policy_finetune::envs::{make_teacher, run_episode, CalibrationOptions, EnvConfig, TeacherTier};

fn main() -> policy_finetune::Result<()> {
    let env = EnvConfig::grid();
    let teacher = make_teacher(&env, TeacherTier::Mastery, 0.8, &CalibrationOptions::default())?;
    let mut e = env.build()?;
    let data = OfflineDataset::collect(&mut e, &teacher, "mastery", 50, false, 0)?;

    let mut replay = ReplayBuffer::new(500);
    let mut resets = RandomStream::new(1, 1);
    let mut actions = RandomStream::new(1, 2);
    while replay.len() < replay.capacity() {
        let ep = run_episode(&mut e, &teacher, ActionSelection::Sample, &mut resets, &mut actions, EpisodeSource::StudentOnline)?;
        replay.extend(ep.transitions);
    }
    println!("dataset {} transitions, replay {} (written {})", data.n_transitions(), replay.len(), replay.total_written());

    let mut rng = RandomStream::new(0, 3);
    for ratio in ["64:0", "48:16", "32:32", "0:64"] {
        let ratio: BatchRatio = ratio.parse()?;
        let b = sample_batch(ratio, Some(&data), Some(&replay), &mut rng)?;
        let rewarded = b.transitions.iter().filter(|t| t.reward > 0.0).count();
        println!("{ratio}: {} from dataset, {} from replay, {rewarded} rewarded", b.from_dataset, b.from_replay);
    }
    Ok(())
}
