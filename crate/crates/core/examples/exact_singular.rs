//! The single-term problem `u'' + (4/r) u' + u^3 = 0` has the explicit
//! singular solution `u = sqrt(2)/r`. Integrate it from `r = 1` and compare.

use emden::integrator::{integrate, IntegratorConfig};
use emden::params::ProblemParams;
use emden::trajectory::{Frame, State};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParams::single_term(5, 3.0, 0.0)?;
    let s = 2f64.sqrt();
    let traj = integrate(State::new(0.0, s, -s), Frame::RAW, 1000f64.ln(), &params, &IntegratorConfig::default())?;
    let mut worst: f64 = 0.0;
    for st in &traj.samples {
        let exact = s * (-st.t).exp();
        worst = worst.max(((st.v - exact) / exact).abs());
    }
    println!("{} samples on r in [1, 1000], termination {:?}", traj.len(), traj.termination);
    println!("max relative error {worst:.3e}");
    Ok(())
}
