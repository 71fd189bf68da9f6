//! At the critical exponent q = 2 the origin frame is conservative and
//! trajectories oscillate around lambda2 on a level set of the potential.

use emden::classify::{classify_end, oscillation_envelope, ClassifyOptions};
use emden::energy::potential_b;
use emden::integrator::{integrate, IntegratorConfig};
use emden::params::{derive_constants, ProblemParams};
use emden::trajectory::{End, Frame, State};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParams::new(5, 1.9, 2.0, 0.0, -0.5)?;
    let dc = derive_constants(&params)?;
    let l2 = dc.lambda2()?;
    let start = State::new(-2.0, l2 + 0.5, 0.0);
    let traj = integrate(start, Frame::new(dc.alpha2), -40.0, &params, &IntegratorConfig::default())?;
    let env = oscillation_envelope(&traj, &dc, End::Origin)?;
    println!("lambda2 = {l2}, b(lambda2) = {:.8}", potential_b(l2, &dc));
    println!("{} extrema, mu1 = {:.6}, mu2 = {:.6}", env.extrema_count(), env.mu1, env.mu2);
    println!("b(mu1) = {:.10}, b(mu2) = {:.10}", env.b_mu1, env.b_mu2);
    let report = classify_end(&traj, &dc, End::Origin, &ClassifyOptions::default())?;
    println!("origin end: {}", report.kind);
    Ok(())
}
