//! Regular shot at the exact height of the Aubin-Talenti bubble for the
//! critical single-term problem in five dimensions.
//!
//! The decaying tail `r^(2-n)` is approached along a saddle, so errors grow
//! like `r^(n-2)`; tight tolerances keep the shot positive to `r = 1000`.

use emden::integrator::IntegratorConfig;
use emden::params::AubinTalenti;
use emden::shooting::{shoot, ShotConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bubble = AubinTalenti::new(5)?;
    let params = bubble.params();
    println!("height (n(n-2))^((n-2)/4) = {:.15}", bubble.height());

    let tight = IntegratorConfig { rtol: 1e-12, atol: 1e-14, ..Default::default() };
    let cfg = ShotConfig { t_end: 1000f64.ln(), integrator: tight, ..Default::default() };
    let shot = shoot(bubble.height(), &params, &cfg)?;
    let traj = shot.trajectory.as_ref().expect("shots keep their trajectory");

    for target in [0.01f64, 0.1, 1.0, 10.0, 100.0] {
        let (t, u) = traj
            .raw_values()
            .min_by(|a, b| (a.0 - target.ln()).abs().total_cmp(&(b.0 - target.ln()).abs()))
            .expect("nonempty");
        let exact = bubble.value(t.exp());
        println!("r = {:>9.4e}: u = {u:.12e}  relative error {:.2e}", t.exp(), (u - exact).abs() / exact);
    }
    println!("tail: {} with constant {:?}", shot.report.kind, shot.report.fitted_constant);

    let loose = ShotConfig { t_end: 12.0, ..Default::default() };
    let shot = shoot(bubble.height(), &params, &loose)?;
    println!("default tolerances to r = e^12: {} ({:?})", shot.report.kind, shot.report.note);
    Ok(())
}
