mod common;

use common::*;
use proptest::prelude::*;

use policy_finetune::approx::{AdamConfig, ParametricPolicy, QApproximator, QHead};
use policy_finetune::critic::{project_distribution, Baseline, CriticConfig, CriticLearner};
use policy_finetune::domain::{Action, Observation, RandomStream, Transition};

const CHAIN: usize = 6;
const GAMMA: f64 = 0.9;
// Probabilities of (right, stay) in every state.
const RIGHT: f64 = 0.7;

/// Chain of six states; moving right from the second-to-last state ends the
/// episode with reward 1, staying costs nothing.
fn chain_transitions() -> Vec<Transition> {
    let mut out = Vec::new();
    for s in 0..CHAIN - 1 {
        for a in 0..2 {
            let next = if a == 0 { s + 1 } else { s };
            let terminal = next == CHAIN - 1;
            out.push(Transition {
                state: Observation::Index(s),
                action: Action::Discrete(a),
                reward: if terminal { 1.0 } else { 0.0 },
                next_state: Observation::Index(next),
                terminal,
                behavior_log_density: 0.0,
            });
        }
    }
    out
}

/// Exact `Q^pi` by iterating the Bellman expectation operator to a fixed point.
fn chain_q() -> Vec<[f64; 2]> {
    let mut q = vec![[0.0; 2]; CHAIN];
    for _ in 0..10_000 {
        let v: Vec<f64> = q.iter().map(|x| RIGHT * x[0] + (1.0 - RIGHT) * x[1]).collect();
        for s in 0..CHAIN - 1 {
            q[s][0] = if s + 1 == CHAIN - 1 { 1.0 } else { GAMMA * v[s + 1] };
            q[s][1] = GAMMA * v[s];
        }
    }
    q
}

fn fixed_policy() -> ParametricPolicy {
    let mut p = ParametricPolicy::tabular_categorical(CHAIN, 2);
    for s in 0..CHAIN {
        p.params[2 * s] = (RIGHT / (1.0 - RIGHT)).ln();
    }
    p
}

fn learn(head: QHead) -> CriticLearner {
    learn_with(head, 20)
}

fn learn_with(head: QHead, target_period: u64) -> CriticLearner {
    let config = CriticConfig {
        gamma: GAMMA,
        target_period,
        optimizer: AdamConfig::with_lr(0.05),
        ..CriticConfig::default()
    };
    let mut critic = CriticLearner::new(QApproximator::tabular(CHAIN, 2, head), config).unwrap();
    let ts = chain_transitions();
    let batch: Vec<&Transition> = ts.iter().collect();
    let policy = fixed_policy();
    let mut rng = RandomStream::new(0, 0);
    for _ in 0..20_000 {
        critic.td_update(&batch, &policy, &mut rng).unwrap();
    }
    critic
}

fn max_error(critic: &CriticLearner) -> f64 {
    let exact = chain_q();
    let mut worst: f64 = 0.0;
    for (s, q) in exact.iter().enumerate().take(CHAIN - 1) {
        for (a, v) in q.iter().enumerate() {
            worst = worst.max((critic.q(&Observation::Index(s), &Action::Discrete(a)) - v).abs());
        }
    }
    worst
}

#[test]
fn scalar_td_converges_to_policy_values() {
    let err = max_error(&learn(QHead::Scalar));
    assert!(err < 1e-4, "max |Q - Q^pi| = {err}");
}

#[test]
fn per_step_target_sync_converges() {
    let err = max_error(&learn_with(QHead::Scalar, 1));
    assert!(err < 1e-3, "max |Q - Q^pi| = {err}");
}

#[test]
fn sampled_baseline_matches_exact_expectation() {
    let critic = learn(QHead::Scalar);
    let policy = fixed_policy();
    let mut rng = RandomStream::new(0, 9);
    let m = 32;
    for s in 0..CHAIN - 1 {
        let obs = Observation::Index(s);
        let (exact, _) = critic.baseline(&obs, &policy, Baseline::Exact, &mut rng).unwrap();
        let q: Vec<f64> = (0..2).map(|a| critic.q(&obs, &Action::Discrete(a))).collect();
        let sd = (RIGHT * (1.0 - RIGHT)).sqrt() * (q[0] - q[1]).abs();
        let (sampled, used) = critic.baseline(&obs, &policy, Baseline::Samples(m), &mut rng).unwrap();
        assert_eq!(used, m);
        let bound = 3.0 * sd / (m as f64).sqrt();
        assert!((sampled - exact).abs() <= bound, "state {s}: |{sampled} - {exact}| > {bound}");
    }
}

#[test]
fn distributional_mean_converges_to_policy_values() {
    // Linear projection keeps means of in-support targets, so the fixed
    // point's mean is exactly Q^pi.
    let head = QHead::Distributional {
        atoms: 51,
        v_min: 0.0,
        v_max: 1.0,
    };
    let err = max_error(&learn(head));
    assert!(err < 2e-3, "max |E Z - Q^pi| = {err}");
}

#[test]
fn delta_projects_onto_neighbours_exactly() {
    projection_delta().unwrap();
}

#[test]
fn projected_means_stay_within_one_atom() {
    projection_means().unwrap();
}

proptest! {
    #[test]
    fn projection_conserves_mass_and_interior_means(
        values in prop::collection::vec(0.0f64..1.0, 1..8),
        raw in prop::collection::vec(0.01f64..1.0, 8),
        atoms in 2usize..60,
    ) {
        let total: f64 = raw[..values.len()].iter().sum();
        let probs: Vec<f64> = raw[..values.len()].iter().map(|p| p / total).collect();
        let out = project_distribution(&values, &probs, atoms, 0.0, 1.0);
        prop_assert!(out.iter().all(|p| *p >= 0.0));
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let dz = 1.0 / (atoms - 1) as f64;
        let mean: f64 = out.iter().enumerate().map(|(i, p)| p * i as f64 * dz).sum();
        let expect: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        prop_assert!((mean - expect).abs() < 1e-12);
    }
}
