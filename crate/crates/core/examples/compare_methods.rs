//! Trains every method on one small budget and prints a table.
//!
//! cargo run --release --example compare_methods -- 500

use std::time::Instant;

use policy_finetune::envs::TeacherTier;
use policy_finetune::trainer::{build_method_for, train, MethodName, RunConfig};

fn main() -> policy_finetune::Result<()> {
    let budget: u64 = std::env::args().nth(1).map_or(500, |a| a.parse().expect("budget"));
    println!("{:<14} {:>8} {:>7} {:>8} {:>7}", "method", "offline", "online", "success", "secs");
    for method in MethodName::ALL {
        let m = build_method_for(method, true);
        let offline = if m.is_offline_only() {
            budget
        } else if m.data.dataset {
            budget / 2
        } else {
            0
        };
        let mut cfg = RunConfig::new(method, TeacherTier::Generalization, budget, offline, 0);
        cfg.hyper.offline_steps = 20_000;
        cfg.hyper.eval_episodes = 300;
        cfg.hyper.curve_points = 2;
        let start = Instant::now();
        let out = train(&cfg)?;
        println!(
            "{:<14} {:>8} {:>7} {:>8.3} {:>7.1}",
            method.to_string(),
            out.ledger.offline_used(),
            out.ledger.online_used(),
            out.eval.success_rate,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
