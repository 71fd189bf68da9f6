//! Derived constants and regime flags for the three reference parameter sets.
//!
//! Run with `cargo run --example exponents`.

use emden::params::{classify_regime, derive_constants, ProblemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sets = [
        ("singular at infinity", ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5)?),
        ("critical q", ProblemParams::new(5, 1.9, 2.0, 0.0, -0.5)?),
        ("singular at origin", ProblemParams::new(5, 2.5, 3.0, 0.0, -0.5)?),
    ];
    for (label, params) in sets {
        let dc = derive_constants(&params)?;
        let regime = classify_regime(&params, &dc);
        println!("{label}: n={} p={} q={} l1={} l2={}", params.n, params.p, params.q, params.l1, params.l2);
        println!("  alpha1 = {:.6}  alpha2 = {:.6}", dc.alpha1, dc.alpha2);
        println!("  lambda1 = {:?}  lambda2 = {:?}", dc.lambda1, dc.lambda2);
        println!("  delta = {:.6}  delta2 = {:.6}", dc.delta, dc.delta2);
        println!(
            "  subcritical two-term: {}  critical case: {:?}  singular case: {:?}",
            regime.subcritical_two_term, regime.critical_case, regime.singular_case
        );
    }
    Ok(())
}
