//! Trajectories in log-radius frames and their CSV representation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::IntegratorConfig;
use crate::params::ProblemParams;

/// Scaling `v = r^alpha u` applied to the amplitude; `alpha = 0` is raw `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub alpha: f64,
}

impl Frame {
    pub const RAW: Frame = Frame { alpha: 0.0 };

    pub fn new(alpha: f64) -> Self {
        Frame { alpha }
    }

    /// Re-expresses a state of this frame in `target`.
    pub fn convert(&self, state: State, target: Frame) -> State {
        if target.alpha == self.alpha {
            return state;
        }
        let shift = target.alpha - self.alpha;
        let scale = (shift * state.t).exp();
        State {
            t: state.t,
            v: scale * state.v,
            vdot: scale * (state.vdot + shift * state.v),
        }
    }
}

/// One of the two singular ends of the half line `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Origin,
    Infinity,
}

impl std::fmt::Display for End {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            End::Origin => "origin",
            End::Infinity => "infinity",
        })
    }
}

/// A point `(t, v, dv/dt)` with `t = ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub v: f64,
    pub vdot: f64,
}

impl State {
    pub fn new(t: f64, v: f64, vdot: f64) -> Self {
        State { t, v, vdot }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.v.is_finite() && self.vdot.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedSpanEnd,
    PositivityLost { t_cross: f64 },
    AmplitudeCap { t_cap: f64 },
    StepUnderflow { t_fail: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frame: Frame,
    pub params: ProblemParams,
    pub samples: Vec<State>,
    pub termination: Termination,
    pub config: IntegratorConfig,
}

impl Trajectory {
    pub fn first(&self) -> Option<&State> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&State> {
        self.samples.last()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Smallest and largest `t` covered.
    pub fn t_range(&self) -> Option<(f64, f64)> {
        let a = self.samples.first()?.t;
        let b = self.samples.last()?.t;
        Some((a.min(b), a.max(b)))
    }

    pub fn is_forward(&self) -> bool {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t >= a.t,
            _ => true,
        }
    }

    /// Raw amplitude `u = r^-alpha v` at each sample.
    pub fn raw_values(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let alpha = self.frame.alpha;
        self.samples
            .iter()
            .map(move |s| (s.t, (-alpha * s.t).exp() * s.v))
    }

    /// Samples with `lo <= t <= hi`, in increasing `t`.
    pub fn samples_between(&self, lo: f64, hi: f64) -> Vec<State> {
        let mut out: Vec<State> = self
            .samples
            .iter()
            .filter(|s| s.t >= lo && s.t <= hi)
            .copied()
            .collect();
        if !self.is_forward() {
            out.reverse();
        }
        out
    }

    pub fn reframe(&self, new_alpha: f64) -> Trajectory {
        reframe(self, new_alpha)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 160);
        out.push_str(CSV_HEADER);
        out.push('\n');
        let alpha = self.frame.alpha;
        for s in &self.samples {
            let r = s.t.exp();
            let damp = (-alpha * s.t).exp();
            let u = damp * s.v;
            let du_dr = (-s.t).exp() * damp * (s.vdot - alpha * s.v);
            let fields = [s.t, r, u, du_dr, s.v, s.vdot, alpha];
            for (i, x) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{}", fmt17(*x)).expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    /// Parses CSV written by [`Trajectory::to_csv`]. The file does not record
    /// why integration stopped: a final sample with `|v| <= 10 atol` is read
    /// back as a positivity loss, anything else as a completed span.
    pub fn from_csv(
        text: &str,
        params: ProblemParams,
        config: IntegratorConfig,
    ) -> Result<Trajectory, CsvError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == CSV_HEADER => {}
            Some((_, header)) => {
                return Err(CsvError::Header {
                    found: header.to_string(),
                })
            }
            None => return Err(CsvError::Empty),
        }
        let mut samples = Vec::new();
        let mut alpha: Option<f64> = None;
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(CsvError::Row {
                    line: line_no,
                    message: format!("expected 7 fields, found {}", fields.len()),
                });
            }
            let mut values = [0.0; 7];
            for (slot, field) in values.iter_mut().zip(&fields) {
                *slot = field.parse::<f64>().map_err(|e| CsvError::Row {
                    line: line_no,
                    message: format!("{field:?}: {e}"),
                })?;
            }
            match alpha {
                None => alpha = Some(values[6]),
                Some(a) if a.to_bits() != values[6].to_bits() => {
                    return Err(CsvError::Row {
                        line: line_no,
                        message: "frame_alpha changes within the file".into(),
                    })
                }
                _ => {}
            }
            let state = State::new(values[0], values[4], values[5]);
            if let Some(prev) = samples.last() {
                let prev: &State = prev;
                let monotone = if samples.len() >= 2 {
                    let dir = samples[1].t - samples[0].t;
                    (state.t - prev.t) * dir > 0.0
                } else {
                    state.t != prev.t
                };
                if !monotone {
                    return Err(CsvError::Row {
                        line: line_no,
                        message: "t is not strictly monotone".into(),
                    });
                }
            }
            samples.push(state);
        }
        let frame = Frame::new(alpha.unwrap_or(0.0));
        let termination = match samples.last() {
            Some(s) if s.v.abs() <= 10.0 * config.atol => {
                Termination::PositivityLost { t_cross: s.t }
            }
            _ => Termination::ReachedSpanEnd,
        };
        Ok(Trajectory {
            frame,
            params,
            samples,
            termination,
            config,
        })
    }
}

/// Portion of a trajectory examined near one end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// The given fraction of the covered `t`-span adjacent to the end.
    Tail { fraction: f64 },
    /// An explicit `t` interval, in either order.
    Range { t0: f64, t1: f64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::Tail { fraction: 0.25 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowError {
    #[error("trajectory has no samples")]
    Empty,
    #[error("tail fraction {0} outside (0, 1]")]
    Fraction(f64),
    #[error("window [{t0}, {t1}] outside the covered span [{lo}, {hi}]")]
    OutOfRange { t0: f64, t1: f64, lo: f64, hi: f64 },
}

impl Window {
    /// Resolves to `(lo, hi)` with `lo <= hi`.
    pub fn resolve(&self, traj: &Trajectory, end: End) -> Result<(f64, f64), WindowError> {
        let (lo, hi) = traj.t_range().ok_or(WindowError::Empty)?;
        match *self {
            Window::Tail { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(WindowError::Fraction(fraction));
                }
                let width = fraction * (hi - lo);
                Ok(match end {
                    End::Infinity => (hi - width, hi),
                    End::Origin => (lo, lo + width),
                })
            }
            Window::Range { t0, t1 } => {
                let (a, b) = (t0.min(t1), t0.max(t1));
                let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
                if !(a.is_finite() && b.is_finite()) || a < lo - slack || b > hi + slack {
                    return Err(WindowError::OutOfRange { t0, t1, lo, hi });
                }
                Ok((a, b))
            }
        }
    }
}

pub const CSV_HEADER: &str = "t,r,u,du_dr,v,dv_dt,frame_alpha";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("empty trajectory file")]
    Empty,
    #[error("unexpected header {found:?}")]
    Header { found: String },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

/// Decimal text with 17 significant digits; parses back to the same bits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Applies `v_new = e^{(a' - a) t} v_old` sample by sample.
pub fn reframe(traj: &Trajectory, new_alpha: f64) -> Trajectory {
    if new_alpha == traj.frame.alpha {
        return traj.clone();
    }
    let target = Frame::new(new_alpha);
    Trajectory {
        frame: target,
        params: traj.params,
        samples: traj
            .samples
            .iter()
            .map(|s| traj.frame.convert(*s, target))
            .collect(),
        termination: traj.termination,
        config: traj.config,
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision, clippy::approx_constant)]
mod tests {
    use super::*;

    fn exact_profile() -> Trajectory {
        let params = ProblemParams::single_term(5, 3.0, 0.0).unwrap();
        let sqrt2 = 2f64.sqrt();
        let samples = (0..=100)
            .map(|i| {
                let t = -2.0 + 0.05 * f64::from(i);
                State::new(t, sqrt2 * (-t).exp(), -sqrt2 * (-t).exp())
            })
            .collect();
        Trajectory {
            frame: Frame::RAW,
            params,
            samples,
            termination: Termination::ReachedSpanEnd,
            config: IntegratorConfig::default(),
        }
    }

    #[test]
    fn reframe_same_alpha_is_identity() {
        let traj = exact_profile();
        assert_eq!(reframe(&traj, 0.0), traj);
    }

    #[test]
    fn reframe_exact_profile_gives_constant() {
        let traj = exact_profile().reframe(1.0);
        for s in &traj.samples {
            assert!((s.v - 2f64.sqrt()).abs() < 1e-14);
            assert!(s.vdot.abs() < 1e-14);
        }
    }

    #[test]
    fn reframe_round_trip() {
        let traj = exact_profile();
        let back = traj.reframe(2.2).reframe(0.0);
        for (a, b) in traj.samples.iter().zip(&back.samples) {
            assert!(((a.v - b.v) / a.v).abs() < 1e-13);
            assert!(((a.vdot - b.vdot) / a.vdot).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_round_trip_is_textually_exact() {
        let traj = exact_profile().reframe(0.7);
        let text = traj.to_csv();
        let back = Trajectory::from_csv(&text, traj.params, traj.config).unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(back.samples, traj.samples);
    }

    #[test]
    fn seventeen_digits_survive() {
        let x = 1.4142135623730951_f64;
        assert_eq!(fmt17(x), "1.4142135623730951e0");
        assert_eq!(fmt17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let params = ProblemParams::single_term(5, 3.0, 0.0).unwrap();
        let err = Trajectory::from_csv("t,u\n0,1\n", params, IntegratorConfig::default());
        assert!(matches!(err, Err(CsvError::Header { .. })));
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let params = ProblemParams::single_term(5, 3.0, 0.0).unwrap();
        let text = format!("{CSV_HEADER}\n0,1,1,0,1,0,0\n1,2,x,0,1,0,0\n");
        match Trajectory::from_csv(&text, params, IntegratorConfig::default()) {
            Err(CsvError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
