//! Randomized invariants of the library.

use approx::assert_relative_eq;
use emden::acceptance::random_admissible;
use emden::classify::{classify_end, ClassifyOptions};
use emden::config::RunConfig;
use emden::energy::{energy_trace, energy_trace_between};
use emden::integrator::{integrate, IntegratorConfig};
use emden::params::{derive_constants, frame_exponent, ProblemParams, Term};
use emden::shooting::{bisect_boundary, connecting_orbit, shoot, ConnectConfig, Direction, ShotConfig};
use emden::trajectory::{End, Frame, State, Trajectory};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn admissible() -> impl Strategy<Value = ProblemParams> {
    any::<u64>().prop_map(|seed| random_admissible(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Valid single-term or two-term parameters, not necessarily admissible
/// for the two-term regime.
fn valid() -> impl Strategy<Value = ProblemParams> {
    (3u32..=10, -1.9f64..0.0, -1.9f64..0.0, 0.05f64..4.0, 0.05f64..4.0).prop_filter_map(
        "invalid parameters",
        |(n, l1, l2, dp, dq)| {
            let nf = f64::from(n);
            let p = (nf + l1) / (nf - 2.0) + dp;
            let q = (nf + l2) / (nf - 2.0) + dq;
            ProblemParams::new(n, p, q, l1, l2).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn lambda_solves_its_equilibrium_equation(params in valid()) {
        let dc = derive_constants(&params).unwrap();
        let n = params.dim();
        if let Some(l1) = dc.lambda1 {
            let target = dc.alpha1 * (n - 2.0 - dc.alpha1);
            prop_assert!((l1.powf(params.p - 1.0) - target).abs() <= 1e-12 * target.abs());
        }
        if let Some(l2) = dc.lambda2 {
            let target = dc.alpha2 * (n - 2.0 - dc.alpha2);
            prop_assert!((l2.powf(params.q - 1.0) - target).abs() <= 1e-12 * target.abs());
        }
    }

    #[test]
    fn each_term_is_autonomous_in_its_own_frame(params in valid()) {
        let dc = derive_constants(&params).unwrap();
        prop_assert!(frame_exponent(&params, dc.alpha1, Term::P).abs() < 1e-14);
        prop_assert!(frame_exponent(&params, dc.alpha2, Term::Q).abs() < 1e-14);
    }

    #[test]
    fn derived_constants_are_reproducible(params in valid()) {
        let a = derive_constants(&params).unwrap();
        let b = derive_constants(&params).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn frame_conversion_round_trips(
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        t in -20.0f64..20.0,
        v in 1e-3f64..10.0,
        vdot in -5.0f64..5.0,
    ) {
        let s = State::new(t, v, vdot);
        let back = Frame::new(beta).convert(Frame::new(alpha).convert(s, Frame::new(beta)), Frame::new(alpha));
        prop_assert_eq!(back.t, t);
        prop_assert!((back.v - v).abs() <= 1e-12 * v.abs());
        prop_assert!((back.vdot - vdot).abs() <= 1e-12 * (v.abs() + vdot.abs()));
    }

    #[test]
    fn json_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = emden::json::to_string(&vec![x]);
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back[0].to_bits(), x.to_bits());
    }

    #[test]
    fn config_hash_tracks_tolerances(rtol in 1e-13f64..1e-6, other in 1e-13f64..1e-6) {
        let mut a = RunConfig::new(ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap());
        a.integrator.rtol = rtol;
        let mut b = a.clone();
        b.integrator.rtol = other;
        prop_assert_eq!(a.hash() == b.hash(), rtol.to_bits() == other.to_bits());
        b.output.dir = "elsewhere".into();
        b.integrator.rtol = rtol;
        prop_assert_eq!(a.hash(), b.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn csv_round_trip_is_bit_exact(params in admissible(), bump in 0.9f64..1.1, t1 in 1.0f64..6.0) {
        let dc = derive_constants(&params).unwrap();
        let start = State::new(0.0, bump * dc.lambda1.unwrap(), 0.0);
        let traj = integrate(start, Frame::new(dc.alpha1), t1, &params, &IntegratorConfig::default()).unwrap();
        let text = traj.to_csv();
        let back = Trajectory::from_csv(&text, params, traj.config).unwrap();
        prop_assert_eq!(back.samples.len(), traj.samples.len());
        for (x, y) in back.samples.iter().zip(&traj.samples) {
            prop_assert_eq!(x.t.to_bits(), y.t.to_bits());
            prop_assert_eq!(x.v.to_bits(), y.v.to_bits());
            prop_assert_eq!(x.vdot.to_bits(), y.vdot.to_bits());
        }
        prop_assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn energy_balances_on_every_subinterval(params in admissible(), a in 2.0f64..6.0, len in 0.5f64..4.0) {
        let dc = derive_constants(&params).unwrap();
        let start = State::new(2.0, 1.05 * dc.lambda1.unwrap(), 0.0);
        let traj = integrate(start, Frame::new(dc.alpha1), 10.0, &params, &IntegratorConfig::default()).unwrap();
        let whole = energy_trace(&traj, &dc).unwrap();
        let part = energy_trace_between(&traj, &dc, a, a + len).unwrap();
        prop_assert!(part.balance_residual().abs() < 1e-6 * whole.energy_scale());
    }

    #[test]
    fn bisection_halves_the_bracket(max_iter in 0usize..20) {
        // Above the critical exponent the classification at a fixed horizon
        // changes near a = 1.085, which gives a real bracket to bisect.
        let params = ProblemParams::single_term(5, 2.8, 0.0).unwrap();
        let b = bisect_boundary(1.0, 1.2, &params, &ShotConfig::default(), max_iter).unwrap();
        prop_assert_eq!(b.iterations, max_iter);
        let width = b.relative_width * b.a_star;
        let expected = 0.2 / 2f64.powi(max_iter as i32);
        // Each midpoint rounds by at most half an ulp of a.
        let slack = (max_iter as f64 + 2.0) * f64::EPSILON * b.a_star;
        prop_assert!((width - expected).abs() <= slack + 1e-12 * expected);
    }
}

#[test]
fn shots_are_deterministic_across_pools() {
    let params = ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap();
    let grid = emden::shooting::log_grid(1e-2, 1e2, 16);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| emden::shooting::scan_thresholds(&grid, &params, &ShotConfig::default()).unwrap())
    };
    let (one, four) = (run(1), run(4));
    for (x, y) in one.shots.iter().zip(&four.shots) {
        assert_eq!(emden::json::to_string(x), emden::json::to_string(y));
        assert_eq!(x.trajectory, y.trajectory);
    }
}

#[test]
fn single_shot_is_bit_reproducible() {
    let params = ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap();
    let a = shoot(0.7, &params, &ShotConfig::default()).unwrap();
    let b = shoot(0.7, &params, &ShotConfig::default()).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
}

#[test]
fn classification_survives_reframing() {
    let params = ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap();
    let dc = derive_constants(&params).unwrap();
    let orbit = connecting_orbit(&params, &dc, Direction::FromInfinity, &ConnectConfig::default()).unwrap();
    let opts = ClassifyOptions::default();
    for end in [End::Origin, End::Infinity] {
        let base = classify_end(&orbit.trajectory, &dc, end, &opts).unwrap();
        for alpha in [0.0, 1.0, dc.alpha2] {
            let other = classify_end(&orbit.trajectory.reframe(alpha), &dc, end, &opts).unwrap();
            assert_eq!(base.kind, other.kind, "{end} alpha {alpha}");
            if let (Some(x), Some(y)) = (base.fitted_constant, other.fitted_constant) {
                assert_relative_eq!(x, y, max_relative = 1e-6);
            }
        }
    }
}

#[test]
fn frame_covariance_of_integration() {
    let params = ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap();
    let dc = derive_constants(&params).unwrap();
    let cfg = IntegratorConfig::default();
    let start = State::new(0.0, 1.2 * dc.lambda1.unwrap(), -0.3);
    let scaled = integrate(start, Frame::new(dc.alpha1), 6.0, &params, &cfg).unwrap();
    let raw_start = Frame::new(dc.alpha1).convert(start, Frame::RAW);
    let raw = integrate(raw_start, Frame::RAW, 6.0, &params, &cfg).unwrap();
    let reframed = scaled.reframe(0.0);
    assert_eq!(reframed.samples.len(), raw.samples.len());
    for (x, y) in reframed.samples.iter().zip(&raw.samples) {
        assert_relative_eq!(x.v, y.v, max_relative = 10.0 * cfg.rtol);
    }
}

#[test]
fn direction_symmetry() {
    let params = ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap();
    let dc = derive_constants(&params).unwrap();
    let cfg = IntegratorConfig::default();
    let frame = Frame::new(dc.alpha1);
    let orbit = connecting_orbit(&params, &dc, Direction::FromInfinity, &ConnectConfig::default()).unwrap();
    let start = orbit.trajectory.samples_between(4.0, 20.0)[0];
    let there = integrate(start, frame, start.t + 4.0, &params, &cfg).unwrap();
    let back = integrate(*there.last().unwrap(), frame, start.t, &params, &cfg).unwrap();
    let end = back.last().unwrap();
    assert_relative_eq!(end.t, start.t, max_relative = 1e-12);
    assert_relative_eq!(end.v, start.v, max_relative = 100.0 * cfg.rtol);
}
