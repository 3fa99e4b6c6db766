use super::Environment;
use crate::domain::{
    ActionSelection, Episode, EpisodeSource, RandomStream, StochasticPolicy, Transition,
};
use crate::Result;

/// Rolls out one episode. The layout comes from `reset_stream`, action noise
/// from `action_stream`; the episode is a pure function of both streams and the
/// policy.
pub fn run_episode<E, P>(
    env: &mut E,
    policy: &P,
    selection: ActionSelection,
    reset_stream: &mut RandomStream,
    action_stream: &mut RandomStream,
    source: EpisodeSource,
) -> Result<Episode>
where
    E: Environment + ?Sized,
    P: StochasticPolicy + ?Sized,
{
    let seed = reset_stream.seed();
    let mut obs = env.reset(reset_stream);
    let mut transitions = Vec::with_capacity(env.spec().horizon);
    let success = loop {
        let action = selection.select(policy, &obs, action_stream);
        let behavior_log_density = policy.log_density(&obs, &action);
        let out = env.step(&action)?;
        let done = out.done();
        let terminal = out.terminal;
        transitions.push(Transition {
            state: obs,
            action,
            reward: out.reward,
            next_state: out.observation.clone(),
            terminal: out.terminal,
            behavior_log_density,
        });
        obs = out.observation;
        if done {
            break terminal;
        }
    };
    Ok(Episode {
        transitions,
        source,
        success,
        seed,
    })
}

/// Fraction of successful episodes over `n` rollouts.
pub fn success_rate<E, P>(
    env: &mut E,
    policy: &P,
    selection: ActionSelection,
    n: usize,
    reset_stream: &mut RandomStream,
    action_stream: &mut RandomStream,
) -> Result<f64>
where
    E: Environment + ?Sized,
    P: StochasticPolicy + ?Sized,
{
    let mut wins = 0usize;
    for _ in 0..n {
        let ep = run_episode(
            env,
            policy,
            selection,
            reset_stream,
            action_stream,
            EpisodeSource::StudentOnline,
        )?;
        wins += ep.success as usize;
    }
    Ok(wins as f64 / n.max(1) as f64)
}
