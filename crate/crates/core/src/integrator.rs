//! Adaptive integration of the radial equation in log-radius frames.
//!
//! With `t = ln r` and `v = r^alpha u` the equation becomes
//!
//! ```text
//! v'' + (n-2-2 alpha) v' - alpha (n-2-alpha) v
//!     + k1 e^{e_p t} v^p + k2 e^{e_q t} v^q = 0,
//! e_p = l1 - (p-1) alpha + 2,   e_q = l2 - (q-1) alpha + 2.
//! ```
//!
//! Integration always happens in `t`; `r` is never a step variable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dopri::{self, Vec2};
use crate::params::{frame_exponent, DerivedConstants, ParamError, ProblemParams, Term};
use crate::trajectory::{End, Frame, State, Termination, Trajectory};

const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("start state must be finite with v > 0, got {0:?}")]
    Start(State),
    #[error("v = {0} is negative; powers of negative amplitudes are undefined")]
    Domain(f64),
    #[error("non-finite right-hand side at {0:?}")]
    NonFinite(State),
    #[error("series start rejected: correction {correction:e} exceeds 1e-6 a (a = {a}, r0 = {r0:e})")]
    SeriesGate { a: f64, r0: f64, correction: f64 },
    #[error("invalid seed: {0}")]
    Seed(String),
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in `t`.
    pub max_step: f64,
    pub amplitude_cap: f64,
    /// Spacing in `t` of the recorded dense samples.
    pub dense_output_stride: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            amplitude_cap: 1e8,
            dense_output_stride: 0.01,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.max_step > 0.0
            && self.amplitude_cap > 0.0
            && self.dense_output_stride > 0.0
            && self.dense_output_stride <= 10.0 * self.max_step;
        if ok {
            Ok(())
        } else {
            Err(IntegratorError::Config(format!("{self:?}")))
        }
    }
}

/// Frame-specific coefficients of the transformed equation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FrameEquation {
    pub damping: f64,
    pub linear: f64,
    pub p: f64,
    pub q: f64,
    pub k1: f64,
    pub k2: f64,
    pub exp_p: f64,
    pub exp_q: f64,
}

impl FrameEquation {
    pub fn new(params: &ProblemParams, frame: Frame) -> Self {
        let n = params.dim();
        let alpha = frame.alpha;
        FrameEquation {
            damping: n - 2.0 - 2.0 * alpha,
            linear: alpha * (n - 2.0 - alpha),
            p: params.p,
            q: params.q,
            k1: params.k1,
            k2: params.k2,
            exp_p: frame_exponent(params, alpha, Term::P),
            exp_q: frame_exponent(params, alpha, Term::Q),
        }
    }

    /// Weighted nonlinear terms `k1 e^{e_p t} v^p + k2 e^{e_q t} v^q`,
    /// continued to `v < 0` as odd functions.
    pub fn nonlinear(&self, t: f64, v: f64) -> f64 {
        let mut out = 0.0;
        if self.k1 != 0.0 {
            out += self.k1 * weight(self.exp_p, t) * odd_pow(v, self.p);
        }
        if self.k2 != 0.0 {
            out += self.k2 * weight(self.exp_q, t) * odd_pow(v, self.q);
        }
        out
    }

    pub fn accel(&self, t: f64, v: f64, vdot: f64) -> f64 {
        -self.damping * vdot + self.linear * v - self.nonlinear(t, v)
    }

    pub fn field(&self, t: f64, y: Vec2) -> Vec2 {
        [y[1], self.accel(t, y[0], y[1])]
    }
}

fn weight(exponent: f64, t: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        (exponent * t).exp()
    }
}

fn odd_pow(v: f64, k: f64) -> f64 {
    if v >= 0.0 {
        v.powf(k)
    } else {
        -(-v).powf(k)
    }
}

/// First-order form `(dv/dt, d²v/dt²)` of the equation in `frame`.
pub fn log_frame_rhs(
    state: &State,
    frame: Frame,
    params: &ProblemParams,
) -> Result<(f64, f64), IntegratorError> {
    if state.v < 0.0 {
        return Err(IntegratorError::Domain(state.v));
    }
    let eq = FrameEquation::new(params, frame);
    let acc = eq.accel(state.t, state.v, state.vdot);
    if !acc.is_finite() || !state.vdot.is_finite() {
        return Err(IntegratorError::NonFinite(*state));
    }
    Ok((state.vdot, acc))
}

fn bisect_zero(dense: &dopri::Dense, mut lo: f64, mut hi: f64) -> f64 {
    // v(lo) > 0 >= v(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if dense.eval(mid)[0] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Integrates from `start` to `t_target` in `frame`, recording dense samples
/// every `dense_output_stride` in `t` plus the final point.
pub fn integrate(
    start: State,
    frame: Frame,
    t_target: f64,
    params: &ProblemParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegratorError> {
    cfg.validate()?;
    params.validate()?;
    if !start.is_finite() || start.v <= 0.0 || !t_target.is_finite() {
        return Err(IntegratorError::Start(start));
    }
    let mut traj = Trajectory {
        frame,
        params: *params,
        samples: vec![start],
        termination: Termination::ReachedSpanEnd,
        config: *cfg,
    };
    if t_target == start.t {
        return Ok(traj);
    }
    let dir = (t_target - start.t).signum();
    let eq = FrameEquation::new(params, frame);
    let f = |t: f64, y: Vec2| eq.field(t, y);

    let mut t = start.t;
    let mut y = [start.v, start.vdot];
    let mut fy = f(t, y);
    if !(fy[0].is_finite() && fy[1].is_finite()) {
        return Err(IntegratorError::NonFinite(start));
    }
    let span = (t_target - t).abs();
    let stride = cfg.dense_output_stride;
    let mut next_sample: u64 = 1;
    let grid = |k: u64| start.t + dir * stride * k as f64;
    let end_guard = 1e-9 * stride;

    let mut h = dir
        * dopri::initial_step(&f, t, y, fy, cfg.rtol, cfg.atol, cfg.max_step.min(span));
    let mut rejected = false;

    for _ in 0..MAX_STEPS {
        let remaining = t_target - t;
        let last_step = h.abs() >= remaining.abs();
        if last_step {
            h = remaining;
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if h.abs() < h_min {
            traj.termination = Termination::StepUnderflow { t_fail: t };
            return Ok(traj);
        }
        let trial = match dopri::try_step(&f, t, y, fy, h, cfg.rtol, cfg.atol) {
            Some(trial) => trial,
            None => {
                h *= 0.25;
                rejected = true;
                continue;
            }
        };
        if trial.err > 1.0 {
            h *= (0.9 * trial.err.powf(-0.2)).max(0.2);
            rejected = true;
            continue;
        }

        let t_new = if last_step { t_target } else { t + h };
        let mut last_t = t;
        // dense samples strictly inside (t, t_new], leaving the target itself
        // to the final push below
        loop {
            let tk = grid(next_sample);
            if dir * (tk - t_new) > 0.0 || dir * (t_target - tk) <= end_guard {
                break;
            }
            let yk = trial.dense.eval(tk);
            if yk[0] <= 0.0 {
                let tc = bisect_zero(&trial.dense, last_t, tk);
                return Ok(finish_crossing(traj, &trial.dense, tc));
            }
            let sample = State::new(tk, yk[0], yk[1]);
            traj.samples.push(sample);
            next_sample += 1;
            last_t = tk;
            if yk[0] >= cfg.amplitude_cap {
                traj.termination = Termination::AmplitudeCap { t_cap: tk };
                return Ok(traj);
            }
        }
        if trial.y_new[0] <= 0.0 {
            let tc = bisect_zero(&trial.dense, last_t, t_new);
            return Ok(finish_crossing(traj, &trial.dense, tc));
        }
        let end_state = State::new(t_new, trial.y_new[0], trial.y_new[1]);
        if !(trial.f_new[0].is_finite() && trial.f_new[1].is_finite()) {
            return Err(IntegratorError::NonFinite(end_state));
        }
        if trial.y_new[0] >= cfg.amplitude_cap {
            push_unique(&mut traj.samples, end_state, dir);
            traj.termination = Termination::AmplitudeCap { t_cap: t_new };
            return Ok(traj);
        }
        if last_step {
            push_unique(&mut traj.samples, end_state, dir);
            return Ok(traj);
        }

        t = t_new;
        y = trial.y_new;
        fy = trial.f_new;
        let mut fac = if trial.err == 0.0 {
            10.0
        } else {
            (0.9 * trial.err.powf(-0.2)).clamp(0.2, 10.0)
        };
        if rejected {
            fac = fac.min(1.0);
        }
        rejected = false;
        h = dir * (h.abs() * fac).min(cfg.max_step);
    }
    traj.termination = Termination::StepUnderflow { t_fail: t };
    Ok(traj)
}

fn push_unique(samples: &mut Vec<State>, state: State, dir: f64) {
    if let Some(last) = samples.last() {
        if dir * (state.t - last.t) <= 0.0 {
            return;
        }
    }
    samples.push(state);
}

fn finish_crossing(mut traj: Trajectory, dense: &dopri::Dense, t_cross: f64) -> Trajectory {
    let y = dense.eval(t_cross);
    let dir = if traj.is_forward() { 1.0 } else { -1.0 };
    let dir = if traj.samples.len() == 1 {
        (t_cross - traj.samples[0].t).signum()
    } else {
        dir
    };
    push_unique(&mut traj.samples, State::new(t_cross, y[0], y[1]), dir);
    traj.termination = Termination::PositivityLost { t_cross };
    traj
}

/// One segment of a piecewise integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub frame: Frame,
    pub t_end: f64,
}

/// Integrates through several frames in turn and returns the concatenated
/// trajectory expressed in `output`. Stops after the first leg that ends on
/// an event.
pub fn integrate_legs(
    start: State,
    start_frame: Frame,
    legs: &[Leg],
    output: Frame,
    params: &ProblemParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegratorError> {
    let mut combined = Trajectory {
        frame: output,
        params: *params,
        samples: vec![start_frame.convert(start, output)],
        termination: Termination::ReachedSpanEnd,
        config: *cfg,
    };
    let mut state = start;
    let mut frame = start_frame;
    for leg in legs {
        let seed = frame.convert(state, leg.frame);
        let piece = integrate(seed, leg.frame, leg.t_end, params, cfg)?;
        combined
            .samples
            .extend(piece.samples.iter().skip(1).map(|s| leg.frame.convert(*s, output)));
        combined.termination = piece.termination;
        state = *piece.last().expect("integrate returns the start sample");
        frame = leg.frame;
        if piece.termination != Termination::ReachedSpanEnd {
            break;
        }
    }
    Ok(combined)
}

/// Two-term series of a regular solution with `u(0) = a`, evaluated at `r0`
/// and expressed in `frame`.
pub fn regular_series_start(
    a: f64,
    r0: f64,
    params: &ProblemParams,
    frame: Frame,
) -> Result<State, IntegratorError> {
    if !(a > 0.0 && a.is_finite()) || !(r0 > 0.0 && r0.is_finite()) {
        return Err(IntegratorError::Seed(format!("need a > 0 and r0 > 0, got a = {a}, r0 = {r0}")));
    }
    let n = params.dim();
    let ProblemParams { p, q, l1, l2, k1, k2, .. } = *params;
    let corr_p = k1 * a.powf(p) * r0.powf(2.0 + l1) / ((2.0 + l1) * (n + l1));
    let corr_q = k2 * a.powf(q) * r0.powf(2.0 + l2) / ((2.0 + l2) * (n + l2));
    let worst = corr_p.max(corr_q);
    if worst >= 1e-6 * a {
        return Err(IntegratorError::SeriesGate { a, r0, correction: worst });
    }
    let u = a - corr_p - corr_q;
    let du_dr = -k1 * a.powf(p) * r0.powf(1.0 + l1) / (n + l1)
        - k2 * a.powf(q) * r0.powf(1.0 + l2) / (n + l2);
    let raw = State::new(r0.ln(), u, r0 * du_dr);
    Ok(Frame::RAW.convert(raw, frame))
}

/// Largest `r0 <= r0_max` (by decades) that passes the series gate.
pub fn gated_series_radius(a: f64, r0_max: f64, params: &ProblemParams) -> Result<f64, IntegratorError> {
    let mut r0 = r0_max;
    for _ in 0..12 {
        match regular_series_start(a, r0, params, Frame::RAW) {
            Ok(_) => return Ok(r0),
            Err(IntegratorError::SeriesGate { .. }) => r0 *= 0.1,
            Err(e) => return Err(e),
        }
    }
    regular_series_start(a, r0, params, Frame::RAW).map(|_| r0)
}

/// Frame in which the singular behavior at `end` is an equilibrium.
pub fn end_frame(dc: &DerivedConstants, end: End) -> Frame {
    match end {
        End::Infinity => Frame::new(dc.alpha1),
        End::Origin => Frame::new(dc.alpha2),
    }
}

/// Seed near the singular equilibrium at `end`: `v = lambda + eps` with
/// `dv/dt = eps * rate`, where the rate is the exponent of the decaying
/// forcing in that frame (`delta` at infinity, `delta2` at the origin).
/// The state is expressed in [`end_frame`].
pub fn singular_seed_start(
    end: End,
    eps: f64,
    t_seed: f64,
    params: &ProblemParams,
    dc: &DerivedConstants,
) -> Result<State, IntegratorError> {
    let (lambda, rate) = match end {
        End::Infinity => (dc.lambda1()?, dc.delta),
        End::Origin => (dc.lambda2()?, dc.delta2),
    };
    let _ = params;
    if eps.is_nan() || eps.abs() >= 0.1 * lambda {
        return Err(IntegratorError::Seed(format!("|eps| = {eps} must be below 0.1 lambda = {}", 0.1 * lambda)));
    }
    let side_ok = match end {
        End::Infinity => t_seed > 0.0,
        End::Origin => t_seed < 0.0,
    };
    if !side_ok || !t_seed.is_finite() {
        return Err(IntegratorError::Seed(format!("seed time {t_seed} is on the wrong side for {end}")));
    }
    Ok(State::new(t_seed, lambda + eps, eps * rate))
}

/// Leading-order forced response `v - lambda` of the singular solution at
/// `t_seed`: the particular solution of the linearization driven by the
/// decaying term. Passing it as `eps` to [`singular_seed_start`] places the
/// seed on the asymptotic solution up to second-order terms.
pub fn forced_seed_amplitude(
    end: End,
    t_seed: f64,
    params: &ProblemParams,
    dc: &DerivedConstants,
) -> Result<f64, IntegratorError> {
    let (lambda, damping, stiffness, rate, coef, power) = match end {
        End::Infinity => {
            let l = dc.lambda1()?;
            (l, dc.c1coef, (params.p - 1.0) * l.powf(params.p - 1.0), dc.delta, params.k2, params.q)
        }
        End::Origin => {
            let l = dc.lambda2()?;
            (l, dc.c2coef, (params.q - 1.0) * l.powf(params.q - 1.0), dc.delta2, params.k1, params.p)
        }
    };
    if coef == 0.0 {
        return Ok(0.0);
    }
    let denom = rate * rate + damping * rate + stiffness;
    if denom.abs() < 1e-12 {
        return Err(IntegratorError::Seed("forcing resonates with the linearization".into()));
    }
    Ok(-coef * lambda.powf(power) * (rate * t_seed).exp() / denom)
}

#[cfg(test)]
#[allow(clippy::excessive_precision, clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::params::{derive_constants, AubinTalenti};
    use approx::assert_relative_eq;

    fn cubic() -> ProblemParams {
        ProblemParams::single_term(5, 3.0, 0.0).unwrap()
    }

    fn config_a() -> ProblemParams {
        ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap()
    }

    #[test]
    fn equilibrium_of_autonomous_frame() {
        let params = cubic();
        let dc = derive_constants(&params).unwrap();
        let lambda = dc.lambda1.unwrap();
        let (d1, d2) =
            log_frame_rhs(&State::new(3.7, lambda, 0.0), Frame::new(dc.alpha1), &params).unwrap();
        assert_eq!(d1, 0.0);
        assert!(d2.abs() < 1e-14);
    }

    #[test]
    fn exact_profile_has_zero_residual_in_raw_frame() {
        let params = cubic();
        let s = 2f64.sqrt();
        // u = sqrt2 e^{-t}: u_t = -u, u_tt = u
        let (_, acc) = log_frame_rhs(&State::new(0.0, s, -s), Frame::RAW, &params).unwrap();
        assert!((acc - s).abs() < 1e-14);
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let r = log_frame_rhs(&State::new(1.0, 0.0, 0.0), Frame::new(2.0), &config_a()).unwrap();
        assert_eq!(r, (0.0, 0.0));
        assert!(matches!(
            log_frame_rhs(&State::new(1.0, -0.1, 0.0), Frame::RAW, &config_a()),
            Err(IntegratorError::Domain(_))
        ));
    }

    #[test]
    fn reproduces_exact_singular_profile() {
        let params = cubic();
        let s = 2f64.sqrt();
        let traj = integrate(
            State::new(0.0, s, -s),
            Frame::RAW,
            1000f64.ln(),
            &params,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::ReachedSpanEnd);
        assert_eq!(traj.last().unwrap().t, 1000f64.ln());
        for st in &traj.samples {
            let exact = s * (-st.t).exp();
            assert!(((st.v - exact) / exact).abs() < 1e-8, "t = {}", st.t);
        }
    }

    #[test]
    fn reproduces_bubble() {
        let bubble = AubinTalenti::new(5).unwrap();
        let params = bubble.params();
        let r0: f64 = 0.01;
        let start = State::new(r0.ln(), bubble.value(r0), r0 * bubble.derivative(r0));
        let cfg = IntegratorConfig { rtol: 1e-12, atol: 1e-16, ..Default::default() };
        let traj = integrate(start, Frame::RAW, 100f64.ln(), &params, &cfg)
            .unwrap();
        let worst = traj
            .samples
            .iter()
            .map(|st| {
                let r = st.t.exp();
                ((st.v - bubble.value(r)) / bubble.value(r)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-7, "worst relative error {worst}");
    }

    #[test]
    fn empty_span_returns_start() {
        let traj = integrate(
            State::new(0.5, 1.0, 0.0),
            Frame::RAW,
            0.5,
            &cubic(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.termination, Termination::ReachedSpanEnd);
    }

    #[test]
    fn samples_are_strictly_monotone_backward() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let seed = singular_seed_start(End::Infinity, 1e-3, 8.0, &params, &dc).unwrap();
        let traj = integrate(seed, Frame::new(dc.alpha1), 0.0, &params, &IntegratorConfig::default())
            .unwrap();
        assert!(traj.samples.windows(2).all(|w| w[1].t < w[0].t));
        assert_eq!(traj.last().unwrap().t, 0.0);
    }

    #[test]
    fn positivity_loss_is_located() {
        let params = config_a();
        let start = regular_series_start(1.0, 1e-4, &params, Frame::RAW).unwrap();
        let cfg = IntegratorConfig::default();
        let traj = integrate(start, Frame::RAW, 10.0, &params, &cfg).unwrap();
        let Termination::PositivityLost { t_cross } = traj.termination else {
            panic!("expected a zero crossing, got {:?}", traj.termination);
        };
        let last = traj.last().unwrap();
        assert_eq!(last.t, t_cross);
        assert!(last.v.abs() < 10.0 * cfg.atol);
        assert!(traj.samples[..traj.len() - 1].iter().all(|s| s.v > 0.0));
    }

    #[test]
    fn amplitude_cap_stops_blow_up() {
        let params = cubic();
        let cfg = IntegratorConfig { amplitude_cap: 5.0, ..Default::default() };
        // growing away from the singular profile towards the origin
        let traj = integrate(State::new(0.0, 2.0, -40.0), Frame::RAW, -20.0, &params, &cfg).unwrap();
        assert!(matches!(traj.termination, Termination::AmplitudeCap { .. }), "{:?} {:?}", traj.termination, traj.samples.iter().map(|s| s.v).fold(0.0, f64::max));
    }

    #[test]
    fn series_start_values() {
        let params = config_a();
        let r0 = 1e-4;
        let s = regular_series_start(1.0, r0, &params, Frame::RAW).unwrap();
        assert_relative_eq!(s.v, 0.99999985085185185, max_relative = 1e-15);
        assert_relative_eq!(s.vdot / r0, -0.0022422222222222222, max_relative = 1e-13);

        let lin = ProblemParams::with_coefficients(5, 1.9, 1.95, 0.0, -0.5, 0.0, 0.0).unwrap();
        let s = regular_series_start(1.0, r0, &lin, Frame::RAW).unwrap();
        assert_eq!((s.v, s.vdot), (1.0, 0.0));

        let s = regular_series_start(2.0, r0, &cubic(), Frame::RAW).unwrap();
        assert_relative_eq!(s.v, 2.0 - 8.0 * r0 * r0 / 10.0, max_relative = 1e-15);
    }

    #[test]
    fn series_gate_rejects_large_radius() {
        assert!(matches!(
            regular_series_start(100.0, 1e-4, &config_a(), Frame::RAW),
            Err(IntegratorError::SeriesGate { .. })
        ));
        let r0 = gated_series_radius(100.0, 1e-4, &config_a()).unwrap();
        assert_eq!(r0, 1e-5);
    }

    /// Independent check of the series: integrate tightly from a much
    /// smaller radius and compare at r0.
    #[test]
    fn series_agrees_with_tight_integration() {
        let params = config_a();
        let cfg = IntegratorConfig { rtol: 1e-13, atol: 1e-15, ..Default::default() };
        let start = regular_series_start(1.0, 1e-6, &params, Frame::RAW).unwrap();
        let traj = integrate(start, Frame::RAW, 1e-4f64.ln(), &params, &cfg).unwrap();
        let end = traj.last().unwrap();
        let series = regular_series_start(1.0, 1e-4, &params, Frame::RAW).unwrap();
        assert!((end.v - series.v).abs() < 1e-12);
        assert_relative_eq!(end.vdot, series.vdot, max_relative = 1e-5);
    }

    #[test]
    fn seeds() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let s = singular_seed_start(End::Infinity, 1e-3, 8.0, &params, &dc).unwrap();
        assert_relative_eq!(s.v, 1.8367404753952032 + 1e-3, max_relative = 1e-13);
        assert_relative_eq!(s.vdot, -0.61111111111111111e-3, max_relative = 1e-13);
        let s = singular_seed_start(End::Infinity, 0.0, 8.0, &params, &dc).unwrap();
        assert_eq!(s.vdot, 0.0);
        assert_eq!(s.v, dc.lambda1.unwrap());

        let c = ProblemParams::new(5, 2.5, 3.0, 0.0, -0.5).unwrap();
        let dcc = derive_constants(&c).unwrap();
        let s = singular_seed_start(End::Origin, 1e-3, -8.0, &c, &dcc).unwrap();
        assert_relative_eq!(s.v, 1.2990381056766580 + 1e-3, max_relative = 1e-13);
        assert_relative_eq!(s.vdot, 0.875e-3, max_relative = 1e-13);

        assert!(singular_seed_start(End::Infinity, 0.5, 8.0, &params, &dc).is_err());
        assert!(singular_seed_start(End::Origin, 1e-3, 8.0, &c, &dcc).is_err());
    }

    #[test]
    fn forced_amplitude_config_a() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let w = forced_seed_amplitude(End::Infinity, 10.0, &params, &dc).unwrap();
        assert_relative_eq!(w, -0.0025816537972604989, max_relative = 1e-12);
        assert_eq!(forced_seed_amplitude(End::Infinity, 10.0, &cubic(), &derive_constants(&cubic()).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn legs_concatenate_in_output_frame() {
        let params = config_a();
        let dc = derive_constants(&params).unwrap();
        let seed = singular_seed_start(End::Infinity, 1e-4, 10.0, &params, &dc).unwrap();
        let legs = [
            Leg { frame: Frame::new(dc.alpha1), t_end: 0.0 },
            Leg { frame: Frame::new(dc.alpha2), t_end: -5.0 },
        ];
        let traj = integrate_legs(seed, Frame::new(dc.alpha1), &legs, Frame::new(dc.alpha2), &params, &IntegratorConfig::default()).unwrap();
        assert!(traj.samples.windows(2).all(|w| w[1].t < w[0].t));
        assert_eq!(traj.last().unwrap().t, -5.0);
        assert_eq!(traj.frame.alpha, dc.alpha2);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = IntegratorConfig { rtol: 0.0, ..Default::default() };
        assert!(integrate(State::new(0.0, 1.0, 0.0), Frame::RAW, 1.0, &cubic(), &cfg).is_err());
        let cfg = IntegratorConfig { dense_output_stride: 1.0, max_step: 0.01, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
