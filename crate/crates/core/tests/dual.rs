mod common;

use common::*;
use policy_finetune::actor::{solve_eta_dual, ETA_MAX};

#[test]
fn dual_respects_tight_bound() {
    dual_feasibility(0.01).unwrap();
}

#[test]
fn dual_respects_medium_bound() {
    dual_feasibility(0.1).unwrap();
}

#[test]
fn dual_respects_loose_bound() {
    dual_feasibility(1.0).unwrap();
}

#[test]
fn two_samples_match_closed_form() {
    dual_two_point().unwrap();
}

#[test]
fn constraint_is_active_at_the_solution() {
    // Interior solutions sit on the constraint, not merely inside it.
    let batch: Vec<Vec<f64>> = (0..16).map(|s| (0..10).map(|j| ((s * 7 + j * 3) % 11) as f64 / 10.0).collect()).collect();
    let sol = solve_eta_dual(&batch, 0.1).unwrap();
    assert!(sol.eta < ETA_MAX);
    let kl = batch.iter().map(|q| reweighted_kl(q, sol.eta)).sum::<f64>() / batch.len() as f64;
    assert!((kl - 0.1).abs() < 1e-6, "{kl}");
}
