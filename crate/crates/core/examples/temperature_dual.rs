//! The three weighting rules and the KL-constrained temperature.

use policy_finetune::actor::{
    compute_weights_advantage, compute_weights_softmax, mean_kl, solve_eta_dual, StateSamples,
};
use policy_finetune::domain::RandomStream;

fn main() -> policy_finetune::Result<()> {
    let q = [0.1, 0.5, 0.2, 0.9];
    for eta in [0.05, 0.3, 10.0] {
        println!("softmax  eta {eta:>5}: {:.3?}", compute_weights_softmax(&q, eta));
    }
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    let adv: Vec<f64> = q.iter().map(|x| x - mean).collect();
    println!("advantage eta 0.1, clip 20: {:.3?}", compute_weights_advantage(&adv, 0.1, Some(20.0)));

    // A batch of 64 states with 20 prior samples each.
    let mut rng = RandomStream::new(3, 0);
    let batch: Vec<Vec<f64>> = (0..64)
        .map(|_| (0..20).map(|_| rng.uniform()).collect())
        .collect();
    let states: Vec<StateSamples> = batch.iter().cloned().map(StateSamples::uniform).collect();
    for eps in [0.01, 0.1, 1.0] {
        let sol = solve_eta_dual(&batch, eps)?;
        println!(
            "KL bound {eps:>4}: eta {:.4}, mean KL {:.5} (recomputed {:.5})",
            sol.eta,
            sol.mean_kl,
            mean_kl(&states, sol.eta)
        );
    }
    Ok(())
}
