//! Acceptance gate: every verification criterion must pass at its stated
//! tolerance. Each test prints the same pass/fail line `chemowave verify`
//! emits, so `cargo test --test acceptance -- --nocapture` doubles as the
//! suite report.

use chemowave::verify;

fn assert_criterion(result: verify::CriterionResult) {
    println!("{}", result.line());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn criterion_01_kernel_identity() {
    assert_criterion(verify::criterion_01());
}

#[test]
fn criterion_02_closed_forms_vs_quadrature() {
    assert_criterion(verify::criterion_02());
}

#[test]
fn criterion_03_kpp_window_reduction() {
    assert_criterion(verify::criterion_03());
}

#[test]
fn criterion_04_chi_to_zero_limits() {
    assert_criterion(verify::criterion_04());
}

#[test]
fn criterion_05_elliptic_eigenfunction() {
    assert_criterion(verify::criterion_05());
}

#[test]
fn criterion_06_envelope_bounds() {
    assert_criterion(verify::criterion_06());
}

#[test]
fn criterion_07_inner_monotone_evolution() {
    assert_criterion(verify::criterion_07());
}

#[test]
fn criterion_08_kpp_wave_oracle() {
    assert_criterion(verify::criterion_08());
}

#[test]
fn criterion_09_chemotactic_wave() {
    assert_criterion(verify::criterion_09());
}

#[test]
fn criterion_10_global_bounds_and_stability() {
    assert_criterion(verify::criterion_10());
}

#[test]
fn criterion_11_minimal_speed_front() {
    assert_criterion(verify::criterion_11());
}

#[test]
fn criterion_12_equilibrium_and_determinism() {
    assert_criterion(verify::criterion_12());
}
