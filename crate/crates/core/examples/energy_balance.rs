//! Energy, damping work and forcing work along trajectories of random
//! admissible parameter sets; their sum is conserved.

use emden::acceptance::random_admissible;
use emden::energy::energy_trace;
use emden::integrator::{integrate, IntegratorConfig};
use emden::params::derive_constants;
use emden::trajectory::{Frame, State};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..5 {
        let params = random_admissible(&mut rng);
        let dc = derive_constants(&params)?;
        let lambda1 = dc.lambda1()?;
        let traj = integrate(
            State::new(2.0, 1.05 * lambda1, 0.0),
            Frame::new(dc.alpha1),
            10.0,
            &params,
            &IntegratorConfig::default(),
        )?;
        let trace = energy_trace(&traj, &dc)?;
        let last = trace.energy.len() - 1;
        println!(
            "n={} p={:.3} q={:.3} l1={:.3} l2={:.3}: E {:.6} -> {:.6}, relative balance residual {:.2e}",
            params.n,
            params.p,
            params.q,
            params.l1,
            params.l2,
            trace.energy[0],
            trace.energy[last],
            trace.relative_residual()
        );
    }
    Ok(())
}
