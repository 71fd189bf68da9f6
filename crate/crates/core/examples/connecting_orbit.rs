//! Singular connecting orbits: seed next to the equilibrium of one end,
//! integrate across, and read off the limit at the other end.

use emden::params::{derive_constants, ProblemParams};
use emden::shooting::{connecting_orbit, default_direction, ConnectConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for params in [ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5)?, ProblemParams::new(5, 2.5, 3.0, 0.0, -0.5)?] {
        let dc = derive_constants(&params)?;
        let direction = default_direction(&params, &dc)?;
        let orbit = connecting_orbit(&params, &dc, direction, &ConnectConfig::default())?;
        println!("p = {}, q = {}: {:?}", params.p, params.q, direction);
        println!("  seed {:?} (offset {:.3e})", orbit.seed, orbit.seed_offset);
        for (label, report, window) in [("near", &orbit.near, orbit.near_window), ("far", &orbit.far, orbit.far_window)] {
            println!(
                "  {label} end {} on t in [{:.1}, {:.1}]: {} constant {:?}",
                report.end, window.0, window.1, report.kind, report.fitted_constant
            );
        }
        println!("  lambda1 = {:.10}, lambda2 = {:.10}", dc.lambda1()?, dc.lambda2()?);
    }
    Ok(())
}
