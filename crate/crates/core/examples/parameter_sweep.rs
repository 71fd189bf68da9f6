//! A 3 x 3 sweep around the singular-at-infinity configuration, written to
//! a temporary directory and checked for independence from the job count.

use emden::config::RunConfig;
use emden::params::ProblemParams;
use emden::sweep::{run_sweep, sweep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::new(ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5)?);
    cfg.sweep.p = vec![1.85, 1.9, 1.93];
    cfg.sweep.q = vec![1.95, 1.97, 1.99];
    println!("{}", cfg.to_toml());

    let root = tempfile::tempdir()?;
    let outcome = run_sweep(&cfg, 4, root.path())?;
    println!("run {} in {}: {} cells, {} failed", cfg.run_id(), outcome.dir.display(), outcome.cells, outcome.failed);
    let again = run_sweep(&cfg, 4, root.path())?;
    println!("second run reused the directory: {}", again.reused);

    let serial = sweep(&cfg, 1)?;
    for cell in &serial.manifest.cells {
        let kinds = |r: &Option<emden::classify::ClassificationReport>| {
            r.as_ref().map(|r| format!("{} {:?}", r.kind, r.fitted_constant)).unwrap_or_else(|| "-".into())
        };
        println!(
            "  cell {} p={} q={}: origin {}, infinity {}",
            cell.index,
            cell.params.p,
            cell.params.q,
            kinds(&cell.origin),
            kinds(&cell.infinity)
        );
    }
    Ok(())
}
