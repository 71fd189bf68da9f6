//! Energies, potentials and a-priori checks along trajectories.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::integrator::FrameEquation;
use crate::params::{DerivedConstants, Term};
use crate::trajectory::{fmt17, End, State, Termination, Trajectory, Window, WindowError};

/// A frame exponent below this magnitude marks a term as autonomous.
const AUTONOMOUS_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("energy is defined only in a frame where one term is autonomous (alpha = {0})")]
    WrongFrame(f64),
    #[error(transparent)]
    Window(#[from] WindowError),
}

/// `b(v) = v^{q+1}/(q+1) - lambda2^{q-1} v^2 / 2`.
pub fn potential_b(v: f64, dc: &DerivedConstants) -> f64 {
    potential(v, dc.params.q, dc.lambda2.unwrap_or(f64::NAN))
}

/// `b1(v) = v^{p+1}/(p+1) - lambda1^{p-1} v^2 / 2`.
pub fn potential_b1(v: f64, dc: &DerivedConstants) -> f64 {
    potential(v, dc.params.p, dc.lambda1.unwrap_or(f64::NAN))
}

fn potential(v: f64, k: f64, lambda: f64) -> f64 {
    v.powf(k + 1.0) / (k + 1.0) - lambda.powf(k - 1.0) * v * v / 2.0
}

/// `db/dv = v^k - lambda^{k-1} v`.
pub fn potential_slope(v: f64, dc: &DerivedConstants, term: Term) -> f64 {
    let (k, lambda) = term_data(dc, term);
    v.powf(k) - lambda.powf(k - 1.0) * v
}

fn term_data(dc: &DerivedConstants, term: Term) -> (f64, f64) {
    match term {
        Term::P => (dc.params.p, dc.lambda1.unwrap_or(f64::NAN)),
        Term::Q => (dc.params.q, dc.lambda2.unwrap_or(f64::NAN)),
    }
}

/// Landmarks of a potential on `v > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialShape {
    pub critical_point: f64,
    pub critical_value: f64,
    pub second_zero: f64,
}

/// `Term::Q` describes `b`, `Term::P` describes `b1`.
pub fn potential_shape(dc: &DerivedConstants, term: Term) -> PotentialShape {
    let (k, lambda) = term_data(dc, term);
    PotentialShape {
        critical_point: lambda,
        critical_value: potential(lambda, k, lambda),
        second_zero: lambda * ((k + 1.0) / 2.0).powf(1.0 / (k - 1.0)),
    }
}

/// Energy along a trajectory together with the work done by damping and by
/// the non-autonomous terms, both accumulated from the first sample in the
/// direction of integration. `E + damping_work + forcing_work` is conserved.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EnergyTrace {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    pub forcing_work: Vec<f64>,
    pub damping_work: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest variation of the conserved combination over the trace; bounds
    /// the balance defect of every sub-interval.
    pub fn balance_residual(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.len() {
            let c = self.energy[i] + self.damping_work[i] + self.forcing_work[i];
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if self.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn energy_scale(&self) -> f64 {
        self.energy.iter().fold(0.0, |m: f64, e| m.max(e.abs()))
    }

    pub fn relative_residual(&self) -> f64 {
        let scale = self.energy_scale();
        if scale == 0.0 {
            self.balance_residual()
        } else {
            self.balance_residual() / scale
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E,forcing_work,damping_work\n");
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt17(self.t[i]),
                fmt17(self.energy[i]),
                fmt17(self.forcing_work[i]),
                fmt17(self.damping_work[i])
            )
            .expect("writing to a String");
        }
        out
    }
}

struct Split {
    eq: FrameEquation,
    auto_p: bool,
    auto_q: bool,
}

impl Split {
    fn new(traj: &Trajectory) -> Result<Self, EnergyError> {
        let eq = FrameEquation::new(&traj.params, traj.frame);
        let auto_p = eq.k1 != 0.0 && eq.exp_p.abs() < AUTONOMOUS_EPS;
        let auto_q = eq.k2 != 0.0 && eq.exp_q.abs() < AUTONOMOUS_EPS;
        if !(auto_p || auto_q) || traj.frame.alpha == 0.0 {
            return Err(EnergyError::WrongFrame(traj.frame.alpha));
        }
        Ok(Split { eq, auto_p, auto_q })
    }

    fn energy(&self, s: &State) -> f64 {
        let v = s.v.max(0.0);
        let mut e = 0.5 * s.vdot * s.vdot - 0.5 * self.eq.linear * v * v;
        if self.auto_p {
            e += self.eq.k1 * v.powf(self.eq.p + 1.0) / (self.eq.p + 1.0);
        }
        if self.auto_q {
            e += self.eq.k2 * v.powf(self.eq.q + 1.0) / (self.eq.q + 1.0);
        }
        e
    }

    /// Non-autonomous force `g(t, v)` and its total derivative along the
    /// solution.
    fn forcing(&self, s: &State) -> (f64, f64) {
        let v = s.v.max(0.0);
        let mut g = 0.0;
        let mut dg = 0.0;
        let mut add = |k: f64, e: f64, power: f64| {
            if k == 0.0 {
                return;
            }
            let w = k * (e * s.t).exp();
            g += w * v.powf(power);
            dg += w * (e * v.powf(power) + power * v.powf(power - 1.0) * s.vdot);
        };
        if !self.auto_p {
            add(self.eq.k1, self.eq.exp_p, self.eq.p);
        }
        if !self.auto_q {
            add(self.eq.k2, self.eq.exp_q, self.eq.q);
        }
        (g, dg)
    }
}

pub fn energy_trace(traj: &Trajectory, dc: &DerivedConstants) -> Result<EnergyTrace, EnergyError> {
    let _ = dc;
    let split = Split::new(traj)?;
    Ok(trace_of(&split, &traj.samples))
}

/// Trace restricted to samples with `t` between `t0` and `t1`.
pub fn energy_trace_between(
    traj: &Trajectory,
    dc: &DerivedConstants,
    t0: f64,
    t1: f64,
) -> Result<EnergyTrace, EnergyError> {
    let _ = dc;
    let split = Split::new(traj)?;
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    if lo == hi {
        return Ok(EnergyTrace::default());
    }
    let samples: Vec<State> = traj
        .samples
        .iter()
        .filter(|s| s.t >= lo && s.t <= hi)
        .copied()
        .collect();
    Ok(trace_of(&split, &samples))
}

fn trace_of(split: &Split, samples: &[State]) -> EnergyTrace {
    let mut trace = EnergyTrace::default();
    let mut prev: Option<(f64, f64, f64, f64, f64)> = None;
    let (mut damp, mut force) = (0.0, 0.0);
    let c = split.eq.damping;
    for s in samples {
        let acc = split.eq.accel(s.t, s.v.max(0.0), s.vdot);
        let (g, dg) = split.forcing(s);
        // integrands c vdot^2 and g vdot with their t-derivatives
        let fd = c * s.vdot * s.vdot;
        let dfd = 2.0 * c * s.vdot * acc;
        let ff = g * s.vdot;
        let dff = dg * s.vdot + g * acc;
        if let Some((t0, fd0, dfd0, ff0, dff0)) = prev {
            let h = s.t - t0;
            damp += corrected_trapezoid(h, fd0, fd, dfd0, dfd);
            force += corrected_trapezoid(h, ff0, ff, dff0, dff);
        }
        prev = Some((s.t, fd, dfd, ff, dff));
        trace.t.push(s.t);
        trace.energy.push(split.energy(s));
        trace.damping_work.push(damp);
        trace.forcing_work.push(force);
    }
    trace
}

/// Trapezoid rule with the endpoint derivative correction; fourth order on
/// each panel.
fn corrected_trapezoid(h: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    0.5 * h * (f0 + f1) - h * h / 12.0 * (d1 - d0)
}

/// Outcome of the a-priori checks on one end of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub applicable: bool,
    pub reason: Option<String>,
    pub end: End,
    pub window: (f64, f64),
    pub frame_alpha: f64,
    /// `sup v` over the window.
    pub sup_v_tail: f64,
    /// `sup |dv/dt|` over the window.
    pub sup_abs_vdot: f64,
    /// `int (dv/dt)^2 dt` over the window.
    pub integral_vdot_sq: f64,
    /// `(T, int_T^{T+2} (dv/dt)^2 dt)` for unit-spaced `T`, ordered towards
    /// the end.
    pub tail_integrals: Vec<(f64, f64)>,
    pub tail_integrals_decreasing: bool,
    /// Whether `r^{n-2} u` is nondecreasing in `r` across the window.
    pub monotone_mean_ok: bool,
    /// Smallest relative step change of `r^{n-2} u`.
    pub monotone_mean_margin: f64,
}

/// Per-step tolerance for monotonicity checks.
pub const MONOTONE_TOL: f64 = 1e-10;

pub fn apriori_bound_report(
    traj: &Trajectory,
    dc: &DerivedConstants,
    end: End,
    window: Window,
) -> Result<BoundReport, EnergyError> {
    let _ = dc;
    let (lo, hi) = window.resolve(traj, end)?;
    let mut report = BoundReport {
        applicable: true,
        reason: None,
        end,
        window: (lo, hi),
        frame_alpha: traj.frame.alpha,
        sup_v_tail: f64::NAN,
        sup_abs_vdot: f64::NAN,
        integral_vdot_sq: f64::NAN,
        tail_integrals: Vec::new(),
        tail_integrals_decreasing: false,
        monotone_mean_ok: false,
        monotone_mean_margin: f64::NAN,
    };
    if let Termination::PositivityLost { t_cross } = traj.termination {
        report.applicable = false;
        report.reason = Some(format!("solution changes sign at t = {t_cross}"));
        return Ok(report);
    }
    let samples = traj.samples_between(lo, hi);
    if samples.len() < 2 {
        report.applicable = false;
        report.reason = Some("fewer than two samples in the window".into());
        return Ok(report);
    }
    report.sup_v_tail = samples.iter().map(|s| s.v).fold(f64::NEG_INFINITY, f64::max);
    report.sup_abs_vdot = samples.iter().map(|s| s.vdot.abs()).fold(0.0, f64::max);

    let eq = FrameEquation::new(&traj.params, traj.frame);
    let mut cumulative = vec![0.0];
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let da = 2.0 * a.vdot * eq.accel(a.t, a.v.max(0.0), a.vdot);
        let db = 2.0 * b.vdot * eq.accel(b.t, b.v.max(0.0), b.vdot);
        let step = corrected_trapezoid(b.t - a.t, a.vdot * a.vdot, b.vdot * b.vdot, da, db);
        cumulative.push(cumulative.last().unwrap() + step);
    }
    report.integral_vdot_sq = *cumulative.last().unwrap();

    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let at = |t: f64| interpolate(&ts, &cumulative, t);
    let count = ((hi - lo - 2.0) + 1e-9).floor();
    if count >= 0.0 {
        for k in 0..=(count as usize) {
            let start = match end {
                End::Infinity => lo + k as f64,
                End::Origin => hi - 2.0 - k as f64,
            };
            report.tail_integrals.push((start, at(start + 2.0) - at(start)));
        }
    }
    report.tail_integrals_decreasing = report.tail_integrals.len() >= 2
        && report.tail_integrals.windows(2).all(|w| w[1].1 <= w[0].1);

    let n = traj.params.dim();
    let alpha = traj.frame.alpha;
    let mean: Vec<f64> = samples
        .iter()
        .map(|s| ((n - 2.0 - alpha) * s.t).exp() * s.v)
        .collect();
    let margin = mean
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    report.monotone_mean_margin = margin;
    report.monotone_mean_ok = margin >= -MONOTONE_TOL;
    Ok(report)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x);
    if i == 0 {
        return ys[0];
    }
    if i >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (x - x0) / (x1 - x0);
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

/// Monotonicity of the flux `r^{n-1} du/dr` in `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxCheck {
    pub ok: bool,
    /// Largest increase between consecutive samples, relative to the largest
    /// flux magnitude.
    pub worst_increase: f64,
}

pub fn flux_monotone(traj: &Trajectory) -> FluxCheck {
    let n = traj.params.dim();
    let alpha = traj.frame.alpha;
    let mut samples = traj.samples.clone();
    if !traj.is_forward() {
        samples.reverse();
    }
    let flux: Vec<f64> = samples
        .iter()
        .map(|s| ((n - 2.0 - alpha) * s.t).exp() * (s.vdot - alpha * s.v))
        .collect();
    let scale = flux.iter().fold(0.0, |m: f64, f| m.max(f.abs()));
    let worst = flux
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_increase = if scale > 0.0 { worst / scale } else { worst };
    FluxCheck {
        ok: flux.len() < 2 || worst_increase <= MONOTONE_TOL,
        worst_increase: if flux.len() < 2 { 0.0 } else { worst_increase },
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision, clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, regular_series_start, singular_seed_start, IntegratorConfig};
    use crate::params::{derive_constants, ProblemParams};
    use crate::trajectory::Frame;

    fn config_a() -> ProblemParams {
        ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap()
    }

    #[test]
    fn potentials_vanish_at_zero() {
        let dc = derive_constants(&config_a()).unwrap();
        assert_eq!(potential_b(0.0, &dc), 0.0);
        assert_eq!(potential_b1(0.0, &dc), 0.0);
    }

    #[test]
    fn potential_critical_point_and_value() {
        let b = ProblemParams::new(5, 1.9, 2.0, 0.0, -0.5).unwrap();
        let dc = derive_constants(&b).unwrap();
        assert_eq!(potential_b(2.25, &dc), -1.8984375);
        assert!(potential_slope(2.25, &dc, Term::Q).abs() < 1e-14);
        let shape = potential_shape(&dc, Term::Q);
        assert_eq!(shape.critical_point, 2.25);
        assert!(potential_b(shape.second_zero, &dc).abs() < 1e-12);
    }

    #[test]
    fn potential_has_single_positive_critical_point() {
        for params in [config_a(), ProblemParams::new(5, 2.5, 3.0, 0.0, -0.5).unwrap()] {
            let dc = derive_constants(&params).unwrap();
            let l2 = dc.lambda2.unwrap();
            assert!(potential_b(l2, &dc) < 0.0);
            for i in 1..1000 {
                let v = 3.0 * l2 * f64::from(i) / 1000.0;
                let slope = potential_slope(v, &dc, Term::Q);
                if (v - l2).abs() > 1e-9 {
                    assert_eq!(slope > 0.0, v > l2, "v = {v}");
                }
            }
        }
    }

    #[test]
    fn equilibrium_trace_is_constant() {
        let params = ProblemParams::single_term(5, 3.0, 0.0).unwrap();
        let dc = derive_constants(&params).unwrap();
        let l = dc.lambda1.unwrap();
        let traj = integrate(
            State::new(0.0, l, 0.0),
            Frame::new(dc.alpha1),
            5.0,
            &params,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let trace = energy_trace(&traj, &dc).unwrap();
        let b1 = potential_b1(l, &dc);
        assert!(b1 < 0.0);
        for e in &trace.energy {
            assert!((e - b1).abs() < 1e-13);
        }
        assert!(trace.balance_residual() < 1e-13);
    }

    #[test]
    fn raw_frame_is_rejected() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let start = regular_series_start(1.0, 1e-4, &params, Frame::RAW).unwrap();
        let traj = integrate(start, Frame::RAW, -8.0, &params, &IntegratorConfig::default()).unwrap();
        assert!(matches!(energy_trace(&traj, &dc), Err(EnergyError::WrongFrame(_))));
    }

    #[test]
    fn zero_length_window_gives_empty_trace() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let seed = singular_seed_start(End::Infinity, 1e-3, 8.0, &params, &dc).unwrap();
        let traj = integrate(seed, Frame::new(dc.alpha1), 2.0, &params, &IntegratorConfig::default()).unwrap();
        assert!(energy_trace_between(&traj, &dc, 4.0, 4.0).unwrap().is_empty());
    }

    #[test]
    fn balance_holds_on_forced_spiral() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let seed = singular_seed_start(End::Infinity, 0.15, 2.0, &params, &dc).unwrap();
        let traj = integrate(seed, Frame::new(dc.alpha1), 16.0, &params, &IntegratorConfig::default()).unwrap();
        let trace = energy_trace(&traj, &dc).unwrap();
        assert!(trace.relative_residual() < 1e-6, "{}", trace.relative_residual());
        let csv = trace.to_csv();
        assert!(csv.starts_with("t,E,forcing_work,damping_work\n"));
        assert_eq!(csv.lines().count(), trace.len() + 1);
    }

    #[test]
    fn exact_profile_report() {
        let params = ProblemParams::single_term(5, 3.0, 0.0).unwrap();
        let dc = derive_constants(&params).unwrap();
        let s = 2f64.sqrt();
        let traj = integrate(State::new(0.0, s, 0.0), Frame::new(1.0), 8.0, &params, &IntegratorConfig::default()).unwrap();
        let report = apriori_bound_report(&traj, &dc, End::Infinity, Window::default()).unwrap();
        assert!(report.applicable);
        assert!((report.sup_v_tail - s).abs() < 1e-12);
        assert!(report.sup_abs_vdot < 1e-12);
        assert!(report.integral_vdot_sq.abs() < 1e-20);
        assert!(report.monotone_mean_ok);
    }

    #[test]
    fn report_flags_sign_change() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let start = regular_series_start(1.0, 1e-4, &params, Frame::RAW).unwrap();
        let traj = integrate(start, Frame::RAW, 12.0, &params, &IntegratorConfig::default()).unwrap();
        let report = apriori_bound_report(&traj, &dc, End::Infinity, Window::default()).unwrap();
        assert!(!report.applicable);
        assert!(report.reason.is_some());
        // flux r^{n-1} u' only decreases from a regular start
        assert!(flux_monotone(&traj).ok);
    }

    #[test]
    fn out_of_range_window_is_an_error() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let seed = singular_seed_start(End::Infinity, 1e-3, 8.0, &params, &dc).unwrap();
        let traj = integrate(seed, Frame::new(dc.alpha1), 2.0, &params, &IntegratorConfig::default()).unwrap();
        let w = Window::Range { t0: 1.0, t1: 5.0 };
        assert!(matches!(
            apriori_bound_report(&traj, &dc, End::Infinity, w),
            Err(EnergyError::Window(WindowError::OutOfRange { .. }))
        ));
    }

    #[test]
    fn corrected_trapezoid_is_exact_for_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let got = corrected_trapezoid(1.5, f(0.5), f(2.0), df(0.5), df(2.0));
        let exact = (2f64.powi(4) - 0.5f64.powi(4)) / 4.0 - (4.0 - 0.25);
        assert!((got - exact).abs() < 1e-14);
    }
}
