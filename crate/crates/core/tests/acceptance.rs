//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with the measured evidence.

use std::io::Write;
use std::sync::LazyLock;

use emden::acceptance::{Suite, Tolerances};

static SUITE: LazyLock<Suite> = LazyLock::new(Suite::new);

fn check(id: u8) {
    let outcome = SUITE.outcome(id, &Tolerances::default()).expect("known criterion");
    // Written to the stream directly so the line shows even when the
    // harness captures output of passing tests.
    let _ = writeln!(std::io::stderr(), "{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn exact_singular_profile() {
    check(1);
}

#[test]
fn regular_bubble() {
    check(2);
}

#[test]
fn connecting_orbit_limits() {
    check(3);
}

#[test]
fn convergence_rate_at_infinity() {
    check(4);
}

#[test]
fn critical_oscillation() {
    check(5);
}

#[test]
fn apriori_bounds() {
    check(6);
}

#[test]
fn energy_balance() {
    check(7);
}

#[test]
fn dichotomy_at_infinity() {
    check(8);
}

#[test]
fn uniqueness_evidence() {
    check(9);
}

#[test]
fn engineering() {
    check(10);
}
