mod common;

use common::*;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use policy_finetune::actor::{draw_prior_actions, Origin, PriorSpec};
use policy_finetune::approx::ParametricPolicy;
use policy_finetune::domain::{Action, ActionSelection, Observation, RandomStream, StochasticPolicy, Transition};
use policy_finetune::envs::{
    solve_optimal, success_rate, EnvConfig, Environment, GridAction, GridStackEnv, GridState, RedSlot, GRID_CELLS,
    GRID_LOCAL_STATES, GRID_N_ACTIONS, GRID_STATES,
};

#[test]
fn reset_positions_are_uniform() {
    let mut env = GridStackEnv::random();
    let mut stream = RandomStream::new(0, 1);
    let n = 100_000;
    let mut counts = [[0u64; GRID_CELLS]; 2];
    let mut collisions = 0;
    for _ in 0..n {
        env.reset(&mut stream);
        let s = env.state();
        counts[0][s.agent] += 1;
        counts[1][env.green()] += 1;
        if s.red == RedSlot::OnCell(s.blue) {
            collisions += 1;
        }
    }
    assert_eq!(collisions, 0);
    let critical = ChiSquared::new((GRID_CELLS - 1) as f64).unwrap().inverse_cdf(0.99);
    for c in counts {
        let e = n as f64 / GRID_CELLS as f64;
        let stat: f64 = c.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        assert!(stat < critical, "chi-square {stat} >= {critical}");
    }
}

/// Policy evaluation of the undegraded teacher by iterating its own
/// deterministic Bellman operator on the fixed layout.
#[test]
fn undegraded_teacher_attains_optimal_values() {
    let sol = solve_optimal(&fixed_layout(), 0.98).unwrap();
    let teacher = grid_teacher(0.0);
    let states: Vec<GridState> = (0..GRID_LOCAL_STATES)
        .map(|l| GridState::from_local(sol.blue, l))
        .filter(GridState::is_valid)
        .collect();
    let mut v = vec![0.0; GRID_STATES];
    let moves: Vec<(usize, GridState, bool)> = states
        .iter()
        .map(|s| {
            let a = teacher.mode(&Observation::Index(s.global_index())).discrete().unwrap();
            let (next, success) = s.apply(GridAction::from_index(a).unwrap());
            (s.global_index(), next, success)
        })
        .collect();
    for _ in 0..2000 {
        for (i, next, success) in &moves {
            v[*i] = if *success { 1.0 } else { 0.98 * v[next.global_index()] };
        }
    }
    let worst = states
        .iter()
        .map(|s| (v[s.global_index()] - sol.value(s)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "max |V_teacher - V*| = {worst}");
}

#[test]
fn optimal_values_match_greedy_rollout_returns() {
    let layout = fixed_layout();
    let sol = solve_optimal(&layout, 0.98).unwrap();
    let mut env = GridStackEnv::random();
    env.reset_to(layout);
    let start = env.state();
    let mut discounted = 0.0;
    let mut scale = 1.0;
    loop {
        let a = sol.greedy_action(&env.state());
        let out = env.step(&Action::Discrete(a)).unwrap();
        discounted += scale * out.reward;
        scale *= 0.98;
        if out.done() {
            break;
        }
    }
    assert!((discounted - sol.value(&start)).abs() < 1e-6, "return {discounted} vs V* {}", sol.value(&start));
}

#[test]
fn fully_degraded_teacher_is_uniform() {
    let teacher = grid_teacher(1.0);
    let obs = Observation::Index(GridState::from_local(12, 0).global_index());
    let mut rng = RandomStream::new(0, 6);
    let n = 10_000;
    let mut counts = [0u64; GRID_N_ACTIONS];
    for _ in 0..n {
        counts[teacher.sample(&obs, &mut rng).discrete().unwrap()] += 1;
    }
    let p = 1.0 / GRID_N_ACTIONS as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sd, "counts {counts:?}");
    }
}

#[test]
fn undegraded_teacher_always_succeeds() {
    let teacher = grid_teacher(0.0);
    let mut env = EnvConfig::grid().build().unwrap();
    let rate = success_rate(
        &mut env,
        &teacher,
        ActionSelection::Mode,
        1000,
        &mut RandomStream::new(3, 1),
        &mut RandomStream::new(3, 2),
    )
    .unwrap();
    assert_eq!(rate, 1.0);
}

#[test]
fn teachers_hit_their_tiers() {
    teacher_calibration().unwrap();
}

#[test]
fn mixture_draws_teacher_at_rate_beta() {
    let teacher = grid_teacher(GEN_EPSILON);
    let policy = ParametricPolicy::tabular_categorical(GRID_STATES, GRID_N_ACTIONS);
    let prior = PriorSpec::behavior_teacher(0.75).unwrap();
    let mut components = RandomStream::new(0, 4);
    let mut samples = RandomStream::new(0, 5);
    let (mut teacher_draws, mut total) = (0u64, 0u64);
    for s in 0..500 {
        let t = Transition {
            state: Observation::Index(s * 31),
            action: Action::Discrete(0),
            reward: 0.0,
            next_state: Observation::Index(s * 31),
            terminal: false,
            behavior_log_density: 0.0,
        };
        let draws = draw_prior_actions(&prior, &t, &policy, Some(&teacher), 20, &mut components, &mut samples).unwrap();
        total += draws.len() as u64;
        teacher_draws += draws.iter().filter(|(_, o)| *o == Origin::TeacherSample).count() as u64;
    }
    assert_eq!(total, 10_000);
    let b = Binomial::new(0.75, total).unwrap();
    let lower = b.cdf(teacher_draws);
    let upper = 1.0 - b.cdf(teacher_draws.saturating_sub(1));
    let p = 2.0 * lower.min(upper);
    assert!(p > 1e-3, "{teacher_draws} teacher draws of {total}: two-sided p = {p}");
}
