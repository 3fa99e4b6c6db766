//! Calibrates both teacher tiers on the grid task and re-measures them on
//! fresh layouts.

use policy_finetune::envs::{make_teacher, measure_teacher, CalibrationOptions, EnvConfig, TeacherTier};

fn main() -> policy_finetune::Result<()> {
    let env = EnvConfig::grid();
    let opts = CalibrationOptions::default();
    for tier in [TeacherTier::Mastery, TeacherTier::Generalization] {
        let teacher = make_teacher(&env, tier, tier.default_success(), &opts)?;
        let check = measure_teacher(&env, &teacher, 4000, 99)?;
        println!(
            "{:>14}: target {:.2}, epsilon {:.4}, held-out success {check:.3}",
            tier.name(),
            tier.default_success(),
            teacher.epsilon()
        );
    }
    Ok(())
}
