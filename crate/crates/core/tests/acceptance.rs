//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line. Run with `cargo test --test acceptance -- --nocapture` to see every
//! line, or via the CLI: `flexmatch validate`.

use flexmatch::validation::run_criterion;

fn check(id: usize) {
    let report = run_criterion(id);
    println!("{}", report.line());
    assert!(report.pass, "{}", report.line());
}

#[test]
fn criterion_01_formula_vs_simulation() {
    check(1);
}

#[test]
fn criterion_02_full_budget_dominance() {
    check(2);
}

#[test]
fn criterion_03_one_sided_at_zero_baseline() {
    check(3);
}

#[test]
fn criterion_04_two_sided_above_b_star() {
    check(4);
}

#[test]
fn criterion_05_limit_convergence() {
    check(5);
}

#[test]
fn criterion_06_bound_sandwich() {
    check(6);
}

#[test]
fn criterion_07_rde_oracle() {
    check(7);
}

#[test]
fn criterion_08_truncation_bridge() {
    check(8);
}

#[test]
fn criterion_09_matching_oracle() {
    check(9);
}

#[test]
fn criterion_10_peak_advantage() {
    check(10);
}

#[test]
fn criterion_11_gradient_stationarity() {
    check(11);
}
