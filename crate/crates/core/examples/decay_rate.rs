//! Rate at which the connecting orbit approaches its limit at infinity,
//! and how fast two neighbouring orbits separate.

use emden::classify::fit_exponential_rate;
use emden::params::{derive_constants, ProblemParams};
use emden::shooting::{connecting_orbit, difference_decay_probe, ConnectConfig, Direction};
use emden::trajectory::Window;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5)?;
    let dc = derive_constants(&params)?;
    let cfg = ConnectConfig::default();
    let orbit = connecting_orbit(&params, &dc, Direction::FromInfinity, &cfg)?;
    for (t0, t1) in [(6.0, 10.0), (6.0, 8.0), (8.0, 10.0)] {
        let fit = fit_exponential_rate(&orbit.trajectory, dc.lambda1()?, Window::Range { t0, t1 })?;
        println!("rate on [{t0}, {t1}] = {:.5}  (predicted {:.5})", fit.rate, dc.delta);
    }
    let probe = difference_decay_probe(&params, &dc, 1e-4, 2e-4, &cfg)?;
    println!(
        "separation of eps = 1e-4 and 2e-4 orbits: rate {:?} on {:?}, max |diff| {:.3e}; damping/2 = {:.4}",
        probe.rate,
        probe.window,
        probe.max_abs_difference,
        -dc.c1coef / 2.0
    );
    Ok(())
}
