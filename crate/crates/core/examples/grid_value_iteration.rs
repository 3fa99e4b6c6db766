//! Solves one grid layout exactly and rolls out the greedy policy.

use std::sync::Arc;

use policy_finetune::domain::{ActionSelection, RandomStream};
use policy_finetune::envs::{solve_optimal, success_rate, EnvConfig, GridLayout, GridOracle, TeacherPolicy};

fn main() -> policy_finetune::Result<()> {
    let mut stream = RandomStream::new(7, 0);
    let layout = GridLayout::random(&mut stream);
    let sol = solve_optimal(&layout, 0.98)?;
    println!(
        "layout {layout:?}: {} sweeps, Bellman residual {:.2e}",
        sol.sweeps,
        sol.bellman_residual()
    );
    let best = sol.values.iter().cloned().fold(0.0, f64::max);
    println!("largest state value {best:.4}");

    // The oracle caches one solution per blue cell; epsilon 0 is the greedy policy.
    let greedy = TeacherPolicy::grid(Arc::new(GridOracle::new(0.98)?), 0.0)?;
    let mut env = EnvConfig::grid().build()?;
    let mut resets = RandomStream::new(0, 1);
    let mut actions = RandomStream::new(0, 2);
    let rate = success_rate(&mut env, &greedy, ActionSelection::Mode, 500, &mut resets, &mut actions)?;
    println!("greedy success over 500 random layouts: {rate:.3}");
    Ok(())
}
