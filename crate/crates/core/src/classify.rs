//! Asymptotic classification of trajectories at either end.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{potential_b, potential_b1};
use crate::params::{DerivedConstants, ParamError};
use crate::trajectory::{End, Frame, State, Termination, Trajectory, Window, WindowError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    SlowDecaySingular,
    FastDecayRegular,
    RegularAtOrigin,
    Oscillatory,
    CrossesZero,
    Undetermined,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("window holds {0} samples; at least 10 are needed")]
    ShortWindow(usize),
    #[error("window holds no samples")]
    EmptyWindow,
    #[error("|v - lambda| = {min_deviation:e} falls below the resolvable floor {floor:e}")]
    Saturated { min_deviation: f64, floor: f64 },
    #[error("need at least 3 minima and 3 maxima, found {minima} and {maxima}")]
    TooFewExtrema { minima: usize, maxima: usize },
    #[error("rate fit needs two resolvable points")]
    Underdetermined,
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    /// Relative distance to lambda accepted as convergence.
    pub tol_class: f64,
    pub window: Window,
    /// Relative peak-to-peak amplitude above which sign changes of `dv/dt`
    /// count as oscillation.
    pub amplitude: f64,
    /// Largest `|dv/dt|` trend accepted as a plateau.
    pub slope: f64,
    /// Largest RMS log-residual of a power-law tail.
    pub power_residual: f64,
    /// Ratio of first to last swing above which oscillation is a spiral
    /// into the equilibrium.
    pub contraction: f64,
    pub min_sign_changes: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol_class: 0.02,
            window: Window::default(),
            amplitude: 0.05,
            slope: 1e-3,
            power_residual: 0.05,
            contraction: 1.5,
            min_sign_changes: 3,
        }
    }
}

/// Extremal values of an oscillating amplitude and their limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationEnvelope {
    /// Local minima ordered towards the end.
    pub minima: Vec<f64>,
    pub maxima: Vec<f64>,
    pub mu1: f64,
    pub mu2: f64,
    /// Spread (max - min) of the values averaged into `mu1` and `mu2`.
    pub mu1_spread: f64,
    pub mu2_spread: f64,
    pub b_mu1: f64,
    pub b_mu2: f64,
}

impl OscillationEnvelope {
    pub fn extrema_count(&self) -> usize {
        self.minima.len() + self.maxima.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub end: End,
    pub kind: Kind,
    /// lambda estimate, `c1` or `c2` depending on `kind`.
    pub fitted_constant: Option<f64>,
    pub residual: Option<f64>,
    pub rate: Option<f64>,
    pub envelope: Option<OscillationEnvelope>,
    pub note: Option<String>,
}

impl ClassificationReport {
    fn bare(end: End, kind: Kind) -> Self {
        ClassificationReport {
            end,
            kind,
            fitted_constant: None,
            residual: None,
            rate: None,
            envelope: None,
            note: None,
        }
    }
}

/// Exponent alpha of the frame in which `end` is studied.
pub fn end_alpha(dc: &DerivedConstants, end: End) -> f64 {
    match end {
        End::Infinity => dc.alpha1,
        End::Origin => dc.alpha2,
    }
}

fn end_lambda(dc: &DerivedConstants, end: End) -> Option<f64> {
    match end {
        End::Infinity => dc.lambda1,
        End::Origin => dc.lambda2,
    }
}

/// Whether the trajectory was integrated towards `end`.
fn heads_to(traj: &Trajectory, end: End) -> bool {
    traj.is_forward() == (end == End::Infinity)
}

pub fn classify_end(
    traj: &Trajectory,
    dc: &DerivedConstants,
    end: End,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport, ClassifyError> {
    if heads_to(traj, end) {
        match traj.termination {
            Termination::PositivityLost { t_cross } => {
                let mut r = ClassificationReport::bare(end, Kind::CrossesZero);
                r.note = Some(format!("v reaches 0 at t = {t_cross}"));
                return Ok(r);
            }
            Termination::AmplitudeCap { t_cap } => {
                let mut r = ClassificationReport::bare(end, Kind::Undetermined);
                r.note = Some(format!("amplitude cap reached at t = {t_cap}"));
                return Ok(r);
            }
            Termination::StepUnderflow { t_fail } => {
                let mut r = ClassificationReport::bare(end, Kind::Undetermined);
                r.note = Some(format!("step size underflow at t = {t_fail}"));
                return Ok(r);
            }
            Termination::ReachedSpanEnd => {}
        }
    }

    let framed = traj.reframe(end_alpha(dc, end));
    let (lo, hi) = opts.window.resolve(&framed, end)?;
    let samples = framed.samples_between(lo, hi);
    if samples.len() < 10 {
        return Err(ClassifyError::ShortWindow(samples.len()));
    }
    let lambda = end_lambda(dc, end);

    let (mean, slope) = linear_fit(&samples);
    let vmax = samples.iter().map(|s| s.v).fold(f64::NEG_INFINITY, f64::max);
    let vmin = samples.iter().map(|s| s.v).fold(f64::INFINITY, f64::min);
    let vmean = samples.iter().map(|s| s.v).sum::<f64>() / samples.len() as f64;
    let sign_changes = samples
        .windows(2)
        .filter(|w| (w[0].vdot > 0.0 && w[1].vdot < 0.0) || (w[0].vdot < 0.0 && w[1].vdot > 0.0))
        .count();
    let relative_amplitude = (vmax - vmin) / vmean.abs();
    let near_lambda = |x: f64| lambda.is_some_and(|l| (x - l).abs() < opts.tol_class * l);

    if sign_changes >= opts.min_sign_changes && relative_amplitude > opts.amplitude {
        let mut swings = swings(&samples);
        if end == End::Origin {
            swings.reverse();
        }
        let contraction = match (swings.first(), swings.last()) {
            (Some(first), Some(last)) if *last > 0.0 => first / last,
            _ => 1.0,
        };
        if contraction > opts.contraction && near_lambda(vmean) {
            let l = lambda.expect("near_lambda implies lambda");
            let mut r = ClassificationReport::bare(end, Kind::SlowDecaySingular);
            r.fitted_constant = Some(vmean);
            r.residual = Some((vmean - l).abs() / l);
            r.rate = fit_exponential_rate(&framed, l, Window::Range { t0: lo, t1: hi })
                .ok()
                .map(|f| f.rate);
            r.note = Some(format!("spiral, swing contraction {contraction:.3}"));
            return Ok(r);
        }
        let mut r = ClassificationReport::bare(end, Kind::Oscillatory);
        r.envelope = oscillation_envelope(&framed, dc, end).ok();
        r.note = Some(format!(
            "{sign_changes} turning points in window, relative amplitude {relative_amplitude:.4}"
        ));
        return Ok(r);
    }

    if slope.abs() < opts.slope && near_lambda(mean) {
        let l = lambda.expect("near_lambda implies lambda");
        let mut r = ClassificationReport::bare(end, Kind::SlowDecaySingular);
        r.fitted_constant = Some(mean);
        r.residual = Some((mean - l).abs() / l);
        r.rate = fit_exponential_rate(&framed, l, Window::Range { t0: lo, t1: hi })
            .ok()
            .map(|f| f.rate);
        return Ok(r);
    }

    let exponent = match end {
        End::Infinity => traj.params.dim() - 2.0,
        End::Origin => 0.0,
    };
    if samples.iter().all(|s| s.v > 0.0) {
        let (coefficient, residual) = fit_power_tail(&framed, exponent, Window::Range { t0: lo, t1: hi })?;
        if residual < opts.power_residual {
            let kind = match end {
                End::Infinity => Kind::FastDecayRegular,
                End::Origin => Kind::RegularAtOrigin,
            };
            let mut r = ClassificationReport::bare(end, kind);
            r.fitted_constant = Some(coefficient);
            r.residual = Some(residual);
            return Ok(r);
        }
    }

    let mut r = ClassificationReport::bare(end, Kind::Undetermined);
    r.note = Some(format!(
        "window mean {mean:.6}, slope {slope:.3e}, {sign_changes} turning points"
    ));
    Ok(r)
}

/// Least-squares line `v = mean + slope (t - t_mid)`.
fn linear_fit(samples: &[State]) -> (f64, f64) {
    let n = samples.len() as f64;
    let tm = samples.iter().map(|s| s.t).sum::<f64>() / n;
    let vm = samples.iter().map(|s| s.v).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for s in samples {
        sxy += (s.t - tm) * (s.v - vm);
        sxx += (s.t - tm) * (s.t - tm);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (vm, slope)
}

/// Absolute differences between consecutive extrema.
fn swings(samples: &[State]) -> Vec<f64> {
    let ext = extrema(samples);
    ext.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect()
}

/// Turning points `(t, v, is_max)` found where `dv/dt` changes sign, refined
/// by the vertex of the parabola through three neighbouring samples.
fn extrema(samples: &[State]) -> Vec<(f64, f64, bool)> {
    let mut out = Vec::new();
    for i in 0..samples.len().saturating_sub(1) {
        let (a, b) = (&samples[i], &samples[i + 1]);
        let is_max = a.vdot > 0.0 && b.vdot <= 0.0;
        let is_min = a.vdot < 0.0 && b.vdot >= 0.0;
        if !(is_max || is_min) {
            continue;
        }
        // skip a zero that was already counted at the previous pair
        if i > 0 && samples[i].vdot == 0.0 {
            continue;
        }
        let left_is_extreme = (is_max && samples[i].v >= samples[i + 1].v)
            || (is_min && samples[i].v <= samples[i + 1].v);
        let j = if i == 0 {
            1
        } else if i + 1 == samples.len() - 1 || left_is_extreme {
            i
        } else {
            i + 1
        };
        let j = j.clamp(1, samples.len() - 2);
        let (p0, p1, p2) = (&samples[j - 1], &samples[j], &samples[j + 1]);
        let (t, v) = parabola_vertex(p0, p1, p2);
        out.push((t, v, is_max));
    }
    out
}

fn parabola_vertex(p0: &State, p1: &State, p2: &State) -> (f64, f64) {
    let (x0, x1, x2) = (p0.t, p1.t, p2.t);
    let d01 = (p1.v - p0.v) / (x1 - x0);
    let d12 = (p2.v - p1.v) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a == 0.0 {
        return (p1.t, p1.v);
    }
    let b = d01 - a * (x0 + x1);
    let t = -b / (2.0 * a);
    let t = t.clamp(x0.min(x2), x0.max(x2));
    (t, p1.v + (t - x1) * (d01 + a * (t - x0)))
}

/// Fits `ln u = ln c - exponent ln r` with the slope held fixed, over the
/// window of raw amplitudes. Returns `c` and the RMS residual in log space.
pub fn fit_power_tail(traj: &Trajectory, exponent: f64, window: Window) -> Result<(f64, f64), ClassifyError> {
    let end = if traj.is_forward() { End::Infinity } else { End::Origin };
    let (lo, hi) = window.resolve(traj, end)?;
    let alpha = traj.frame.alpha;
    let logs: Vec<f64> = traj
        .samples_between(lo, hi)
        .iter()
        .filter(|s| s.v > 0.0)
        .map(|s| s.v.ln() - alpha * s.t + exponent * s.t)
        .collect();
    if logs.is_empty() {
        return Err(ClassifyError::EmptyWindow);
    }
    let m = logs.len() as f64;
    let intercept = logs.iter().sum::<f64>() / m;
    let rms = (logs.iter().map(|x| (x - intercept).powi(2)).sum::<f64>() / m).sqrt();
    Ok((intercept.exp(), rms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    /// Number of points entering the regression.
    pub points: usize,
    /// Whether `v - lambda` changed sign and the fit used the envelope.
    pub envelope: bool,
}

/// Slope of `ln |v - lambda|` against `t` in the trajectory's own frame.
/// When `v - lambda` changes sign the peaks of `|v - lambda|` between sign
/// changes are regressed instead.
pub fn fit_exponential_rate(traj: &Trajectory, lambda: f64, window: Window) -> Result<RateFit, ClassifyError> {
    let end = if traj.is_forward() { End::Infinity } else { End::Origin };
    let (lo, hi) = window.resolve(traj, end)?;
    let samples = traj.samples_between(lo, hi);
    if samples.len() < 2 {
        return Err(ClassifyError::EmptyWindow);
    }
    let dev: Vec<f64> = samples.iter().map(|s| s.v - lambda).collect();
    let floor = 100.0 * traj.config.atol;
    let min_dev = dev.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    let signs_constant = dev.iter().all(|d| *d > 0.0) || dev.iter().all(|d| *d < 0.0);
    if signs_constant {
        if min_dev < floor {
            return Err(ClassifyError::Saturated { min_deviation: min_dev, floor });
        }
        let pts: Vec<(f64, f64)> = samples.iter().zip(&dev).map(|(s, d)| (s.t, d.abs().ln())).collect();
        return Ok(RateFit { rate: slope(&pts), points: pts.len(), envelope: false });
    }
    // peaks of |dev| on each sign-constant segment; partial end segments
    // are dropped when enough interior ones exist
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut best = (samples[0].t, dev[0].abs());
    for i in 1..dev.len() {
        if dev[i].signum() != dev[i - 1].signum() {
            peaks.push(best);
            best = (samples[i].t, dev[i].abs());
        } else if dev[i].abs() > best.1 {
            best = (samples[i].t, dev[i].abs());
        }
    }
    peaks.push(best);
    if peaks.len() >= 4 {
        peaks = peaks[1..peaks.len() - 1].to_vec();
    }
    let min_peak = peaks.iter().fold(f64::INFINITY, |m, p| m.min(p.1));
    if min_peak < floor {
        return Err(ClassifyError::Saturated { min_deviation: min_peak, floor });
    }
    if peaks.len() < 2 {
        return Err(ClassifyError::Underdetermined);
    }
    let pts: Vec<(f64, f64)> = peaks.iter().map(|(t, a)| (*t, a.ln())).collect();
    Ok(RateFit { rate: slope(&pts), points: pts.len(), envelope: true })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in pts {
        sxy += (x - xm) * (y - ym);
        sxx += (x - xm) * (x - xm);
    }
    sxy / sxx
}

/// Extrema of `v` in the frame of `end` over the whole trajectory. The
/// limits average the three extrema of each type nearest the end; `b` is
/// used at the origin and `b1` at infinity.
pub fn oscillation_envelope(
    traj: &Trajectory,
    dc: &DerivedConstants,
    end: End,
) -> Result<OscillationEnvelope, ClassifyError> {
    let framed = traj.reframe(end_alpha(dc, end));
    let mut samples = framed.samples.clone();
    if !framed.is_forward() {
        samples.reverse();
    }
    let mut ext = extrema(&samples);
    if end == End::Origin {
        ext.reverse();
    }
    let minima: Vec<f64> = ext.iter().filter(|e| !e.2).map(|e| e.1).collect();
    let maxima: Vec<f64> = ext.iter().filter(|e| e.2).map(|e| e.1).collect();
    if minima.len() < 3 || maxima.len() < 3 {
        return Err(ClassifyError::TooFewExtrema { minima: minima.len(), maxima: maxima.len() });
    }
    let tail = |xs: &[f64]| -> (f64, f64) {
        let last = &xs[xs.len() - 3..];
        let mean = last.iter().sum::<f64>() / 3.0;
        let spread = last.iter().fold(f64::NEG_INFINITY, |m: f64, x| m.max(*x))
            - last.iter().fold(f64::INFINITY, |m: f64, x| m.min(*x));
        (mean, spread)
    };
    let (mu1, mu1_spread) = tail(&minima);
    let (mu2, mu2_spread) = tail(&maxima);
    let b = |v: f64| match end {
        End::Origin => potential_b(v, dc),
        End::Infinity => potential_b1(v, dc),
    };
    Ok(OscillationEnvelope {
        b_mu1: b(mu1),
        b_mu2: b(mu2),
        minima,
        maxima,
        mu1,
        mu2,
        mu1_spread,
        mu2_spread,
    })
}

/// Frame used by [`classify_end`] for `end`.
pub fn classification_frame(dc: &DerivedConstants, end: End) -> Frame {
    Frame::new(end_alpha(dc, end))
}
