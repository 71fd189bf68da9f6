//! Shooting from regular starts and seeding from singular ends.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify_end, ClassificationReport, ClassifyError, ClassifyOptions, Kind};
use crate::integrator::{
    end_frame, forced_seed_amplitude, gated_series_radius, integrate_legs, regular_series_start,
    singular_seed_start, IntegratorConfig, IntegratorError, Leg,
};
use crate::params::{classify_regime, derive_constants, DerivedConstants, ParamError, ProblemParams, SingularCase};
use crate::trajectory::{End, Frame, State, Termination, Trajectory, Window};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShootError {
    #[error("initial height must be positive and finite, got {0}")]
    Height(f64),
    #[error("parameters outside the two-term regime and not single-term")]
    Regime,
    #[error("bracket [{a_lo}, {a_hi}] is degenerate")]
    DegenerateBracket { a_lo: f64, a_hi: f64 },
    #[error("both bracket ends classify as {0}")]
    InvalidBracket(Kind),
    #[error("grid has {0} points; at least 16 are required")]
    CoarseGrid(usize),
    #[error("grid must be strictly increasing and positive")]
    UnsortedGrid,
    #[error("no singular connection is predicted for these parameters")]
    NoConnection,
    #[error("seed amplitude {eps} exceeds 1e-3 lambda = {limit}")]
    SeedTooLarge { eps: f64, limit: f64 },
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShotConfig {
    /// Largest series radius; shrunk by decades until the series gate holds.
    pub r0: f64,
    pub t_end: f64,
    pub integrator: IntegratorConfig,
    pub classify: ClassifyOptions,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            r0: 1e-4,
            t_end: 12.0,
            integrator: IntegratorConfig::default(),
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShotResult {
    pub a: f64,
    /// Series radius actually used.
    pub r0: f64,
    pub report: ClassificationReport,
    /// Integration or classification failure, if any; the report is then
    /// `Undetermined`.
    pub error: Option<String>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

fn shootable(params: &ProblemParams) -> Result<DerivedConstants, ShootError> {
    params.validate()?;
    let dc = derive_constants(params)?;
    let single = params.k1 == 0.0 || params.k2 == 0.0;
    if !(single || classify_regime(params, &dc).subcritical_two_term) {
        return Err(ShootError::Regime);
    }
    Ok(dc)
}

/// Regular solution with `u(0) = a`, carried in the raw frame to `r = 1`
/// and in the alpha1 frame beyond, classified at infinity.
pub fn shoot(a: f64, params: &ProblemParams, cfg: &ShotConfig) -> Result<ShotResult, ShootError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(ShootError::Height(a));
    }
    let dc = shootable(params)?;
    Ok(shoot_with(a, params, &dc, cfg))
}

fn shoot_with(a: f64, params: &ProblemParams, dc: &DerivedConstants, cfg: &ShotConfig) -> ShotResult {
    let failed = |r0: f64, e: String| ShotResult {
        a,
        r0,
        report: ClassificationReport {
            end: End::Infinity,
            kind: Kind::Undetermined,
            fitted_constant: None,
            residual: None,
            rate: None,
            envelope: None,
            note: Some(e.clone()),
        },
        error: Some(e),
        trajectory: None,
    };
    let r0 = match gated_series_radius(a, cfg.r0, params) {
        Ok(r0) => r0,
        Err(e) => return failed(cfg.r0, e.to_string()),
    };
    let run = || -> Result<(Trajectory, ClassificationReport), ShootError> {
        let traj = regular_trajectory(a, r0, cfg.t_end, params, dc, &cfg.integrator)?;
        let report = classify_end(&traj, dc, End::Infinity, &cfg.classify)?;
        Ok((traj, report))
    };
    match run() {
        Ok((traj, report)) => ShotResult { a, r0, report, error: None, trajectory: Some(traj) },
        Err(e) => failed(r0, e.to_string()),
    }
}

/// Regular solution with `u(0) = a` from the series at `r0`, carried in the
/// raw frame up to `t = 0` and in the alpha1 frame from there to `t_end`.
/// The result is expressed in the alpha1 frame.
pub fn regular_trajectory(
    a: f64,
    r0: f64,
    t_end: f64,
    params: &ProblemParams,
    dc: &DerivedConstants,
    integrator: &IntegratorConfig,
) -> Result<Trajectory, IntegratorError> {
    let far = Frame::new(dc.alpha1);
    let start = regular_series_start(a, r0, params, Frame::RAW)?;
    let mut legs = Vec::with_capacity(2);
    if start.t < 0.0 && t_end > 0.0 {
        legs.push(Leg { frame: Frame::RAW, t_end: 0.0 });
    }
    legs.push(Leg { frame: far, t_end });
    integrate_legs(start, Frame::RAW, &legs, far, params, integrator)
}

/// A change of classification between neighbouring heights.
#[derive(Debug, Clone, Serialize)]
pub struct Boundary {
    pub a_lo: f64,
    pub a_hi: f64,
    pub kind_lo: Kind,
    pub kind_hi: Kind,
    pub a_star: f64,
    /// Final bracket width relative to `a_star`.
    pub relative_width: f64,
    pub iterations: usize,
    /// Shot repeated at `a_star`.
    pub threshold: ShotResult,
}

/// Bisects `[a_lo, a_hi]` on the classification at infinity until the
/// bracket is below `1e-12` relative or `max_iter` halvings were made.
pub fn bisect_boundary(
    a_lo: f64,
    a_hi: f64,
    params: &ProblemParams,
    cfg: &ShotConfig,
    max_iter: usize,
) -> Result<Boundary, ShootError> {
    let dc = shootable(params)?;
    if a_lo == a_hi {
        return Err(ShootError::DegenerateBracket { a_lo, a_hi });
    }
    for a in [a_lo, a_hi] {
        if !(a > 0.0 && a.is_finite()) {
            return Err(ShootError::Height(a));
        }
    }
    let (lo, hi) = (a_lo.min(a_hi), a_lo.max(a_hi));
    let k_lo = shoot_with(lo, params, &dc, cfg).report.kind;
    let k_hi = shoot_with(hi, params, &dc, cfg).report.kind;
    bisect_known(lo, hi, k_lo, k_hi, params, &dc, cfg, max_iter)
}

#[allow(clippy::too_many_arguments)]
fn bisect_known(
    mut lo: f64,
    mut hi: f64,
    kind_lo: Kind,
    mut kind_hi: Kind,
    params: &ProblemParams,
    dc: &DerivedConstants,
    cfg: &ShotConfig,
    max_iter: usize,
) -> Result<Boundary, ShootError> {
    if kind_lo == kind_hi {
        return Err(ShootError::InvalidBracket(kind_lo));
    }
    let (a_lo, a_hi) = (lo, hi);
    let mut iterations = 0;
    while iterations < max_iter && (hi - lo) / (0.5 * (lo + hi)) >= 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let kind = shoot_with(mid, params, dc, cfg).report.kind;
        if kind == kind_lo {
            lo = mid;
        } else {
            hi = mid;
            kind_hi = kind;
        }
        iterations += 1;
    }
    let a_star = 0.5 * (lo + hi);
    Ok(Boundary {
        a_lo,
        a_hi,
        kind_lo,
        kind_hi,
        a_star,
        relative_width: (hi - lo) / a_star,
        iterations,
        threshold: shoot_with(a_star, params, dc, cfg),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdScan {
    pub grid: Vec<f64>,
    pub kinds: Vec<Kind>,
    pub shots: Vec<ShotResult>,
    pub boundaries: Vec<Boundary>,
    pub boundary_count: usize,
}

/// `n` points spaced evenly in `ln a` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Shoots every grid height and bisects every change of kind between
/// neighbours. Shots run in parallel; results keep grid order.
pub fn scan_thresholds(grid: &[f64], params: &ProblemParams, cfg: &ShotConfig) -> Result<ThresholdScan, ShootError> {
    if grid.len() < 16 {
        return Err(ShootError::CoarseGrid(grid.len()));
    }
    if !(grid[0] > 0.0 && grid.windows(2).all(|w| w[0] < w[1])) {
        return Err(ShootError::UnsortedGrid);
    }
    let dc = shootable(params)?;
    let shots: Vec<ShotResult> = grid.par_iter().map(|&a| shoot_with(a, params, &dc, cfg)).collect();
    let kinds: Vec<Kind> = shots.iter().map(|s| s.report.kind).collect();
    let brackets: Vec<usize> = (0..grid.len() - 1).filter(|&i| kinds[i] != kinds[i + 1]).collect();
    let boundaries = brackets
        .par_iter()
        .map(|&i| bisect_known(grid[i], grid[i + 1], kinds[i], kinds[i + 1], params, &dc, cfg, 80))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ThresholdScan {
        grid: grid.to_vec(),
        kinds,
        boundary_count: boundaries.len(),
        shots: shots
            .into_iter()
            .map(|mut s| {
                s.trajectory = None;
                s
            })
            .collect(),
        boundaries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FromInfinity,
    FromOrigin,
}

impl Direction {
    pub fn seeded_end(self) -> End {
        match self {
            Direction::FromInfinity => End::Infinity,
            Direction::FromOrigin => End::Origin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectConfig {
    /// Seed offset from lambda; `None` means `1e-4 lambda`.
    pub eps: Option<f64>,
    /// Seed time; `None` means `+20` from infinity and `-20` from the origin.
    pub t_seed: Option<f64>,
    /// Where the integration changes from the seeded end's frame to the
    /// far end's frame.
    pub t_switch: f64,
    /// Far end of the span; `None` means `-30` or `+30`.
    pub t_far: Option<f64>,
    /// Add the leading forced response of the decaying term to the seed.
    pub forced_response: bool,
    /// Fraction of each leg used as its classification window.
    pub window_fraction: f64,
    pub integrator: IntegratorConfig,
    pub classify: ClassifyOptions,
}

impl Default for ConnectConfig {
    fn default() -> Self {
        ConnectConfig {
            eps: None,
            t_seed: None,
            t_switch: 0.0,
            t_far: None,
            forced_response: true,
            window_fraction: 0.25,
            integrator: IntegratorConfig::default(),
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConnectingOrbit {
    pub direction: Direction,
    /// Offset from lambda actually seeded, forced response included.
    pub seed_offset: f64,
    pub seed: State,
    /// In the seeded end's frame.
    pub trajectory: Trajectory,
    pub near_window: (f64, f64),
    pub far_window: (f64, f64),
    pub near: ClassificationReport,
    pub far: ClassificationReport,
}

/// Direction predicted by the regime: from infinity when the singular
/// connection is singular at infinity or the problem has a single term.
pub fn default_direction(params: &ProblemParams, dc: &DerivedConstants) -> Result<Direction, ShootError> {
    if params.k1 == 0.0 || params.k2 == 0.0 {
        return Ok(Direction::FromInfinity);
    }
    match classify_regime(params, dc).singular_case {
        SingularCase::SingularAtInfinity => Ok(Direction::FromInfinity),
        SingularCase::SingularAtOrigin => Ok(Direction::FromOrigin),
        SingularCase::None => Err(ShootError::NoConnection),
    }
}

/// Seeds next to the singular equilibrium of one end and integrates across
/// to the other, switching frames at `t_switch`.
pub fn connecting_orbit(
    params: &ProblemParams,
    dc: &DerivedConstants,
    direction: Direction,
    cfg: &ConnectConfig,
) -> Result<ConnectingOrbit, ShootError> {
    params.validate()?;
    let single = params.k1 == 0.0 || params.k2 == 0.0;
    if !single && classify_regime(params, dc).singular_case == SingularCase::None {
        return Err(ShootError::NoConnection);
    }
    let near_end = direction.seeded_end();
    let far_end = match near_end {
        End::Infinity => End::Origin,
        End::Origin => End::Infinity,
    };
    let lambda = match near_end {
        End::Infinity => dc.lambda1()?,
        End::Origin => dc.lambda2()?,
    };
    let sign = if near_end == End::Infinity { 1.0 } else { -1.0 };
    let t_seed = cfg.t_seed.unwrap_or(20.0 * sign);
    let t_far = cfg.t_far.unwrap_or(-30.0 * sign);
    let eps = cfg.eps.unwrap_or(1e-4 * lambda);
    if eps.abs() > 1e-3 * lambda {
        return Err(ShootError::SeedTooLarge { eps, limit: 1e-3 * lambda });
    }
    let forced = if cfg.forced_response {
        forced_seed_amplitude(near_end, t_seed, params, dc)?
    } else {
        0.0
    };
    let offset = eps + forced;
    let seed = singular_seed_start(near_end, offset, t_seed, params, dc)?;
    let near_frame = end_frame(dc, near_end);
    let legs = [
        Leg { frame: near_frame, t_end: cfg.t_switch },
        Leg { frame: end_frame(dc, far_end), t_end: t_far },
    ];
    let trajectory = integrate_legs(seed, near_frame, &legs, near_frame, params, &cfg.integrator)?;

    let f = cfg.window_fraction;
    let near_window = (t_seed - f * (t_seed - cfg.t_switch), t_seed);
    let far_window = (t_far, t_far + f * (cfg.t_switch - t_far));
    let classify = |end: End, w: (f64, f64)| {
        let opts = ClassifyOptions { window: Window::Range { t0: w.0, t1: w.1 }, ..cfg.classify };
        classify_end(&trajectory, dc, end, &opts)
    };
    let near = classify(near_end, near_window)?;
    let far = if trajectory.termination == Termination::ReachedSpanEnd {
        classify(far_end, far_window)?
    } else {
        classify_end(&trajectory, dc, far_end, &cfg.classify)?
    };
    Ok(ConnectingOrbit {
        direction,
        seed_offset: offset,
        seed,
        trajectory,
        near_window,
        far_window,
        near,
        far,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayProbe {
    pub max_abs_difference: f64,
    /// Growth rate in `t` of the separation between the two orbits over the
    /// window; negative values mean the orbits approach as `t` increases.
    pub rate: Option<f64>,
    pub saturated: bool,
    pub window: (f64, f64),
}

/// Runs two connections from infinity that differ only in the seed offset
/// and measures how their separation evolves over the seeded end's window.
/// With complex linearized roots the separation is measured by the
/// quadratic form `x'^2 + c x x' + k x^2`, which decays exactly like
/// `e^{-c t}` under the linearization, so half its log-slope is the
/// envelope rate.
pub fn difference_decay_probe(
    params: &ProblemParams,
    dc: &DerivedConstants,
    eps1: f64,
    eps2: f64,
    cfg: &ConnectConfig,
) -> Result<DecayProbe, ShootError> {
    let run = |eps: f64| connecting_orbit(params, dc, Direction::FromInfinity, &ConnectConfig { eps: Some(eps), ..*cfg });
    let a = run(eps1)?;
    let b = if eps1.to_bits() == eps2.to_bits() { a.clone() } else { run(eps2)? };
    let window = a.near_window;
    let lambda = dc.lambda1()?;
    let c = dc.c1coef;
    let k = (params.p - 1.0) * lambda.powf(params.p - 1.0);

    let pairs: Vec<(f64, f64, f64)> = a
        .trajectory
        .samples
        .iter()
        .zip(&b.trajectory.samples)
        .take_while(|(x, y)| x.t == y.t)
        .filter(|(x, _)| x.t >= window.0 && x.t <= window.1)
        .map(|(x, y)| (x.t, x.v - y.v, x.vdot - y.vdot))
        .collect();
    let max_abs_difference = pairs.iter().fold(0.0, |m: f64, p| m.max(p.1.abs()));
    let floor = 100.0 * cfg.integrator.atol;
    let mut probe = DecayProbe { max_abs_difference, rate: None, saturated: false, window };
    if max_abs_difference < floor || pairs.len() < 2 {
        probe.saturated = true;
        return Ok(probe);
    }
    let pts: Vec<(f64, f64)> = if c * c < 4.0 * k {
        pairs
            .iter()
            .map(|&(t, x, xd)| (t, 0.5 * (xd * xd + c * x * xd + k * x * x).ln()))
            .collect()
    } else {
        pairs.iter().filter(|p| p.1 != 0.0).map(|&(t, x, _)| (t, x.abs().ln())).collect()
    };
    probe.rate = Some(slope(&pts));
    Ok(probe)
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
