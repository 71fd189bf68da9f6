//! Scan regular shots over a logarithmic grid of heights and bisect every
//! change of classification at infinity.

use emden::params::ProblemParams;
use emden::shooting::{log_grid, scan_thresholds, ShotConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5)?;
    let scan = scan_thresholds(&log_grid(1e-2, 1e2, 64), &params, &ShotConfig::default())?;
    println!("two-term problem: {} boundaries", scan.boundary_count);
    for (a, shot) in scan.grid.iter().zip(&scan.shots).step_by(8) {
        println!("  a = {a:>10.4e}: {} {}", shot.report.kind, shot.report.note.as_deref().unwrap_or(""));
    }

    // Above the critical exponent every regular solution stays positive.
    let params = ProblemParams::single_term(5, 2.8, 0.0)?;
    let cfg = ShotConfig { t_end: 30.0, ..Default::default() };
    let scan = scan_thresholds(&log_grid(1e-2, 1e2, 32), &params, &cfg)?;
    let positive = scan.kinds.iter().filter(|k| **k != emden::classify::Kind::CrossesZero).count();
    println!("single term u^2.8: {positive} of {} shots stay positive", scan.kinds.len());
    println!("  {} boundaries", scan.boundary_count);
    for b in &scan.boundaries {
        println!("  {} -> {} at a* = {:.12e} (width {:.1e})", b.kind_lo, b.kind_hi, b.a_star, b.relative_width);
    }
    Ok(())
}
