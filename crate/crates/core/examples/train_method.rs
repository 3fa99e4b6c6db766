//! Trains one method on the grid task and prints its learning curve.
//!
//! cargo run --release --example train_method -- R-CRR 3000 1500 0

use std::time::Instant;

use policy_finetune::envs::TeacherTier;
use policy_finetune::trainer::{train, MethodName, RunConfig};

fn main() -> policy_finetune::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let method: MethodName = arg(0, "R-CRR").parse()?;
    let budget: u64 = arg(1, "3000").parse().expect("budget");
    let offline: u64 = arg(2, "1500").parse().expect("offline episodes");
    let seed: u64 = arg(3, "0").parse().expect("seed");

    let mut cfg = RunConfig::new(method, TeacherTier::Generalization, budget, offline, seed);
    if method == MethodName::Mpo || method == MethodName::Dagger {
        cfg.offline_episodes = 0;
    }
    if let Ok(steps) = std::env::var("OFFLINE_STEPS") {
        cfg.hyper.offline_steps = steps.parse().expect("OFFLINE_STEPS");
    }
    let start = Instant::now();
    let out = train(&cfg)?;
    println!("step    offline online  det_success  window  actor_loss");
    for row in &out.log {
        println!(
            "{:>7} {:>7} {:>6}  {:>10.3}  {:>6}  {}",
            row.gradient_step,
            row.episodes_offline_used,
            row.episodes_online_used,
            row.success_rate,
            row.online_window_success.map_or("-".into(), |w| format!("{w:.3}")),
            row.actor_loss.map_or("-".into(), |l| format!("{l:.4}")),
        );
    }
    println!(
        "{method}: success {:.3} ± {:.3} over {} episodes (teacher epsilon {:.3}, {} gradient steps, {:.1}s)",
        out.eval.success_rate,
        out.eval.stderr,
        out.eval.episodes,
        out.teacher_epsilon,
        out.stats.gradient_steps,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
