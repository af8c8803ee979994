//! The acceptance gate: every release-blocking criterion as one test, each
//! printing a single pass/fail line (visible with `--nocapture`, and always
//! printed on failure). All checks run at their calibrated full budgets.

use gpbandit::verify::{
    determinism, elliptical_potential, lenient_saturation, lockin_shape, mig_structure,
    posterior_oracle, residual_bounds, schedule_check, second_moment, sublinearity,
    ts_identity, woodbury_check, CheckOutcome,
};

fn report(criterion: &str, outcome: CheckOutcome) {
    let tag = if outcome.passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion} ({}): {}", outcome.name, outcome.detail);
    assert!(outcome.passed, "{criterion}: {}", outcome.detail);
}

#[test]
fn criterion_01_posterior_oracle_equivalence() {
    report("criterion 01", posterior_oracle(200).unwrap());
}

#[test]
fn criterion_02_woodbury_consistency() {
    report("criterion 02", woodbury_check(false));
}

#[test]
fn criterion_03_elliptical_potential_hard_inequality() {
    report("criterion 03", elliptical_potential(500).unwrap());
}

#[test]
fn criterion_04_mig_structure() {
    report("criterion 04", mig_structure().unwrap());
}

#[test]
fn criterion_05_ts_distributional_identity() {
    report("criterion 05", ts_identity(100_000).unwrap());
}

#[test]
fn criterion_06_two_arm_tail_shape() {
    report("criterion 06", lockin_shape(1_000_000, 200_000).unwrap());
}

#[test]
fn criterion_07_second_moment_bound() {
    report("criterion 07", second_moment(500).unwrap());
}

#[test]
fn criterion_08_lenient_saturation() {
    report("criterion 08", lenient_saturation(200, (256, 512)).unwrap());
}

#[test]
fn criterion_09_sublinearity() {
    report("criterion 09", sublinearity(100, &[64, 128, 256, 512, 1024]).unwrap());
}

#[test]
fn criterion_10_gap_schedule() {
    report("criterion 10", schedule_check().unwrap());
}

#[test]
fn criterion_11_residual_bounds() {
    report("criterion 11", residual_bounds(20_000).unwrap());
}

#[test]
fn criterion_12_run_determinism() {
    report("criterion 12", determinism().unwrap());
}
