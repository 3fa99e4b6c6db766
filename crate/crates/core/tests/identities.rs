mod common;

use common::*;

#[test]
fn zero_beta_rmpo_on_sparse_replay_is_mpo() {
    identity_rmpo_mpo().unwrap();
}

#[test]
fn zero_beta_rcrr_on_replay_is_crr_mixed() {
    identity_rcrr_crr_mixed().unwrap();
}

#[test]
fn unit_weights_on_dataset_are_bc() {
    identity_unit_weight_bc().unwrap();
}

#[test]
fn full_teacher_weight_at_huge_temperature_is_dagger_mixed() {
    identity_beta_one_is_dagger().unwrap();
}
