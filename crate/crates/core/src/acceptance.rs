//! The acceptance suite: ten criteria, each measured once and then judged
//! against a table of tolerances that can be perturbed from the command
//! line.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{classify_end, fit_exponential_rate, oscillation_envelope, ClassifyOptions, Kind};
use crate::config::RunConfig;
use crate::energy::{apriori_bound_report, energy_trace, flux_monotone, potential_b};
use crate::integrator::{integrate, IntegratorConfig};
use crate::params::{derive_constants, AubinTalenti, ProblemParams};
use crate::shooting::{
    connecting_orbit, log_grid, scan_thresholds, shoot, ConnectConfig, ConnectingOrbit, Direction, ShotConfig,
    ShotResult,
};
use crate::sweep::sweep;
use crate::trajectory::{End, Frame, State, Trajectory, Window};

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "exact singular profile"),
    (2, "regular bubble"),
    (3, "connecting orbit limits"),
    (4, "convergence rate at infinity"),
    (5, "critical oscillation"),
    (6, "a-priori bounds"),
    (7, "energy balance"),
    (8, "dichotomy at infinity"),
    (9, "uniqueness evidence"),
    (10, "engineering"),
];

const DEFAULTS: [(&str, f64); 16] = [
    ("c1.rel_err", 1e-8),
    ("c1.runtime_s", 1.0),
    ("c2.rel_err", 1e-7),
    ("c2.c1_rel", 1e-3),
    ("c3.rel", 5e-3),
    ("c3.runtime_s", 10.0),
    ("c4.halfwidth", 0.1),
    ("c5.min_extrema", 6.0),
    ("c5.b_rel", 1e-3),
    ("c6.sup_vdot", 1e-3),
    ("c6.monotone_tol", 1e-10),
    ("c7.balance", 1e-6),
    ("c8.max_outside", 0.0),
    ("c9.boundaries", 1.0),
    ("c9.bracket", 1e-12),
    ("c10.mutations", 1.0),
];

/// Perturbation applied to each of criteria 1-9 by the mutation check.
const MUTATIONS: [(u8, &str, f64); 9] = [
    (1, "c1.rel_err", 1e-30),
    (2, "c2.c1_rel", 1e-30),
    (3, "c3.rel", 1e-30),
    (4, "c4.halfwidth", 1e-30),
    (5, "c5.b_rel", 1e-30),
    (6, "c6.sup_vdot", 1e-30),
    (7, "c7.balance", 1e-30),
    (8, "c8.max_outside", -1.0),
    (9, "c9.boundaries", 2.0),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcceptanceError {
    #[error("unknown tolerance {0:?}")]
    UnknownKey(String),
    #[error("expected key=value, got {0:?}")]
    Assignment(String),
    #[error("unknown criterion {0}")]
    UnknownCriterion(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        self.0[key]
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), AcceptanceError> {
        match self.0.get_mut(key) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(AcceptanceError::UnknownKey(key.to_string())),
        }
    }

    /// Applies `key=value`.
    pub fn apply(&mut self, assignment: &str) -> Result<(), AcceptanceError> {
        let bad = || AcceptanceError::Assignment(assignment.to_string());
        let (key, value) = assignment.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        self.set(key.trim(), value)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

/// Measured quantities of one criterion.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Evidence {
    pub values: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl Evidence {
    fn put(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    fn flag(&mut self, key: &str, value: bool) {
        self.flags.insert(key.to_string(), value);
    }

    fn v(&self, key: &str) -> f64 {
        self.values.get(key).copied().unwrap_or(f64::NAN)
    }

    fn f(&self, key: &str) -> bool {
        self.flags.get(key).copied().unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub evidence: Option<Evidence>,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn config_a() -> ProblemParams {
    ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).expect("valid")
}

fn config_b() -> ProblemParams {
    ProblemParams::new(5, 1.9, 2.0, 0.0, -0.5).expect("valid")
}

fn tight() -> IntegratorConfig {
    IntegratorConfig { rtol: 1e-12, atol: 1e-14, ..Default::default() }
}

type Measured = Result<Evidence, String>;

/// Lazily measured evidence shared by all criteria of one run.
#[derive(Default)]
pub struct Suite {
    evidence: [OnceLock<Measured>; 10],
    orbit_a: OnceLock<Result<(ConnectingOrbit, f64), String>>,
    bubble: OnceLock<Result<ShotResult, String>>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    fn orbit_a(&self) -> Result<&(ConnectingOrbit, f64), String> {
        self.orbit_a
            .get_or_init(|| {
                let params = config_a();
                let dc = derive_constants(&params).map_err(|e| e.to_string())?;
                let start = Instant::now();
                let orbit = connecting_orbit(&params, &dc, Direction::FromInfinity, &ConnectConfig::default())
                    .map_err(|e| e.to_string())?;
                Ok((orbit, start.elapsed().as_secs_f64()))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Exact bubble height shot to `r = 1000` at tight tolerances.
    fn bubble(&self) -> Result<&ShotResult, String> {
        self.bubble
            .get_or_init(|| {
                let bubble = AubinTalenti::new(5).map_err(|e| e.to_string())?;
                let cfg = ShotConfig { t_end: 1000f64.ln(), integrator: tight(), ..Default::default() };
                shoot(bubble.height(), &bubble.params(), &cfg).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn evidence(&self, id: u8) -> Result<&Evidence, String> {
        let slot = &self.evidence[usize::from(id.clamp(1, 10)) - 1];
        slot.get_or_init(|| match id {
            1 => measure_1(),
            2 => self.measure_2(),
            3 => self.measure_3(),
            4 => self.measure_4(),
            5 => measure_5(),
            6 => self.measure_6(),
            7 => measure_7(),
            8 => measure_8(),
            9 => measure_9(),
            _ => measure_10(),
        })
        .as_ref()
        .map_err(Clone::clone)
    }

    pub fn outcome(&self, id: u8, tol: &Tolerances) -> Result<CriterionOutcome, AcceptanceError> {
        let name = CRITERIA
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, n)| *n)
            .ok_or(AcceptanceError::UnknownCriterion(id))?;
        let (passed, detail, evidence) = match self.evidence(id) {
            Err(e) => (false, format!("measurement failed: {e}"), None),
            Ok(ev) => {
                let (passed, detail) = if id == 10 { self.judge_10(ev, tol) } else { judge(id, ev, tol) };
                (passed, detail, Some(ev.clone()))
            }
        };
        Ok(CriterionOutcome { id, name, passed, detail, evidence })
    }

    pub fn run(&self, ids: &[u8], tol: &Tolerances) -> Result<Vec<CriterionOutcome>, AcceptanceError> {
        ids.iter().map(|&id| self.outcome(id, tol)).collect()
    }

    fn measure_2(&self) -> Measured {
        let shot = self.bubble()?;
        let bubble = AubinTalenti::new(5).map_err(|e| e.to_string())?;
        let traj = shot.trajectory.as_ref().ok_or("bubble shot has no trajectory")?;
        let mut ev = Evidence::default();
        let lo = 0.01f64.ln();
        let hi = 100f64.ln();
        let worst = traj
            .raw_values()
            .filter(|(t, _)| *t >= lo && *t <= hi)
            .map(|(t, u)| {
                let exact = bubble.value(t.exp());
                ((u - exact) / exact).abs()
            })
            .fold(0.0, f64::max);
        ev.put("max_rel_err", worst);
        ev.flag("fast_decay", shot.report.kind == Kind::FastDecayRegular);
        let c1 = shot.report.fitted_constant.unwrap_or(f64::NAN);
        ev.put("c1", c1);
        ev.put("c1_rel_err", (c1 / 15f64.powf(0.75) - 1.0).abs());
        ev.notes.push(format!("tail kind {}", shot.report.kind));
        Ok(ev)
    }

    fn measure_3(&self) -> Measured {
        let (orbit, seconds) = self.orbit_a()?;
        let dc = derive_constants(&config_a()).map_err(|e| e.to_string())?;
        let (l1, l2) = (dc.lambda1().map_err(|e| e.to_string())?, dc.lambda2().map_err(|e| e.to_string())?);
        let mut ev = Evidence::default();
        let inf = orbit.near.fitted_constant.unwrap_or(f64::NAN);
        let org = orbit.far.fitted_constant.unwrap_or(f64::NAN);
        ev.put("lambda1", l1);
        ev.put("lambda2", l2);
        ev.put("infinity_constant", inf);
        ev.put("origin_constant", org);
        ev.put("infinity_rel", (inf / l1 - 1.0).abs());
        ev.put("origin_rel", (org / l2 - 1.0).abs());
        ev.put("seconds", *seconds);
        ev.flag("infinity_slow", orbit.near.kind == Kind::SlowDecaySingular);
        ev.flag("origin_slow", orbit.far.kind == Kind::SlowDecaySingular);
        Ok(ev)
    }

    fn measure_4(&self) -> Measured {
        let (orbit, _) = self.orbit_a()?;
        let dc = derive_constants(&config_a()).map_err(|e| e.to_string())?;
        let fit = fit_exponential_rate(&orbit.trajectory, dc.lambda1().map_err(|e| e.to_string())?, Window::Range { t0: 6.0, t1: 10.0 })
            .map_err(|e| e.to_string())?;
        let mut ev = Evidence::default();
        ev.put("rate", fit.rate);
        ev.put("delta", dc.delta);
        Ok(ev)
    }

    fn measure_6(&self) -> Measured {
        let params = config_a();
        let dc = derive_constants(&params).map_err(|e| e.to_string())?;
        // A nonzero seed offset excites homogeneous modes that grow toward
        // +inf, so the tail is checked on the pure forced-response seed.
        let cfg = ConnectConfig { eps: Some(0.0), ..Default::default() };
        let orbit = connecting_orbit(&params, &dc, Direction::FromInfinity, &cfg).map_err(|e| e.to_string())?;
        let (lo, hi) = orbit.near_window;
        let report = apriori_bound_report(&orbit.trajectory, &dc, End::Infinity, Window::Range { t0: lo, t1: hi })
            .map_err(|e| e.to_string())?;
        let mut ev = Evidence::default();
        ev.put("sup_abs_vdot", report.sup_abs_vdot);
        ev.flag("tail_integrals_decreasing", report.tail_integrals_decreasing);
        ev.put("tail_integrals", report.tail_integrals.len() as f64);
        ev.put("orbit_mean_margin", report.monotone_mean_margin);

        let mut worst_flux = f64::NEG_INFINITY;
        for a in [0.1, 1.0, 10.0] {
            let shot = shoot(a, &params, &ShotConfig::default()).map_err(|e| e.to_string())?;
            let traj = shot.trajectory.as_ref().ok_or("shot has no trajectory")?;
            worst_flux = worst_flux.max(flux_monotone(traj).worst_increase);
        }
        ev.put("flux_worst_increase", worst_flux);

        let bubble = self.bubble()?;
        let traj = bubble.trajectory.as_ref().ok_or("bubble shot has no trajectory")?;
        let bdc = derive_constants(&traj.params).map_err(|e| e.to_string())?;
        // Beyond r = 100 the per-step growth of r^(n-2)u falls below the
        // error amplified along the saddle approach.
        let tail = apriori_bound_report(traj, &bdc, End::Infinity, Window::Range { t0: 10f64.ln(), t1: 100f64.ln() })
            .map_err(|e| e.to_string())?;
        ev.flag("fast_decay_run", bubble.report.kind == Kind::FastDecayRegular);
        ev.put("fast_decay_mean_margin", tail.monotone_mean_margin);
        
        Ok(ev)
    }

    fn judge_10(&self, ev: &Evidence, tol: &Tolerances) -> (bool, String) {
        let csv = ev.f("csv_round_trip");
        let det = ev.f("sweep_deterministic");
        let mut flipped = Vec::new();
        let mut missed = Vec::new();
        if tol.get("c10.mutations") != 0.0 {
            for (id, key, value) in MUTATIONS {
                let Ok(evidence) = self.evidence(id) else {
                    // a criterion that cannot be measured fails under any tolerance
                    flipped.push(id);
                    continue;
                };
                let mut perturbed = tol.clone();
                perturbed.set(key, value).expect("mutation keys exist");
                if judge(id, evidence, &perturbed).0 {
                    missed.push(id);
                } else {
                    flipped.push(id);
                }
            }
        }
        let passed = csv && det && missed.is_empty();
        (
            passed,
            format!(
                "csv round trip {}, sweep jobs=1 vs jobs=8 {}, perturbed criteria failing {:?}, not failing {:?}",
                if csv { "exact" } else { "differs" },
                if det { "identical" } else { "differ" },
                flipped,
                missed
            ),
        )
    }
}

fn judge(id: u8, ev: &Evidence, tol: &Tolerances) -> (bool, String) {
    match id {
        1 => {
            let err = ev.v("max_rel_err");
            let secs = ev.v("seconds");
            (
                err < tol.get("c1.rel_err") && secs < tol.get("c1.runtime_s"),
                format!("max relative error {err:.3e} over r in [1, 1e3], {secs:.3} s"),
            )
        }
        2 => {
            let err = ev.v("max_rel_err");
            let c1 = ev.v("c1_rel_err");
            (
                err < tol.get("c2.rel_err") && ev.f("fast_decay") && c1 < tol.get("c2.c1_rel"),
                format!(
                    "max relative error {err:.3e} over r in [0.01, 100], {}, c1 = {:.10} (relative error {c1:.2e})",
                    ev.notes.first().map(String::as_str).unwrap_or(""),
                    ev.v("c1")
                ),
            )
        }
        3 => {
            let (ri, ro) = (ev.v("infinity_rel"), ev.v("origin_rel"));
            let t = tol.get("c3.rel");
            (
                ev.f("infinity_slow") && ev.f("origin_slow") && ri < t && ro < t && ev.v("seconds") < tol.get("c3.runtime_s"),
                format!(
                    "infinity {:.8} vs {:.8} ({ri:.2e}), origin {:.8} vs {:.8} ({ro:.2e}), {:.3} s",
                    ev.v("infinity_constant"),
                    ev.v("lambda1"),
                    ev.v("origin_constant"),
                    ev.v("lambda2"),
                    ev.v("seconds")
                ),
            )
        }
        4 => {
            let (rate, delta) = (ev.v("rate"), ev.v("delta"));
            let h = tol.get("c4.halfwidth");
            (
                (rate - delta).abs() <= h,
                format!("rate {rate:.6} over t in [6, 10], expected {delta:.6} +- {h}"),
            )
        }
        5 => {
            let n = ev.v("extrema");
            let (mu1, mu2, l2) = (ev.v("mu1"), ev.v("mu2"), ev.v("lambda2"));
            let (b1, b2) = (ev.v("b_mu1"), ev.v("b_mu2"));
            let rel = (b1 - b2).abs() / b1.abs();
            (
                n >= tol.get("c5.min_extrema") && mu1 <= l2 && l2 <= mu2 && rel < tol.get("c5.b_rel") && b1 < 0.0,
                format!(
                    "{n} extrema, mu1 = {mu1:.6} <= {l2} <= mu2 = {mu2:.6}, b(mu1) = {b1:.8}, b(mu2) = {b2:.8}, relative gap {rel:.2e}"
                ),
            )
        }
        6 => {
            let m = tol.get("c6.monotone_tol");
            let sup = ev.v("sup_abs_vdot");
            let flux = ev.v("flux_worst_increase");
            let mean = ev.v("fast_decay_mean_margin");
            let passed = sup < tol.get("c6.sup_vdot")
                && ev.f("tail_integrals_decreasing")
                && flux <= m
                && ev.f("fast_decay_run")
                && mean >= -m;
            (
                passed,
                format!(
                    "tail sup|v'| {sup:.3e}, {} tail integrals decreasing: {}, flux worst increase {flux:.2e}, bubble r^(n-2)u worst relative step {mean:.2e} on r in [10, 100]",
                    ev.v("tail_integrals"),
                    ev.f("tail_integrals_decreasing")
                ),
            )
        }
        7 => {
            let worst = ev.v("worst_relative_residual");
            (
                worst < tol.get("c7.balance"),
                format!("worst relative balance residual {worst:.3e} over {} trajectories", ev.v("trajectories")),
            )
        }
        8 => {
            let outside = ev.v("outside");
            (
                outside <= tol.get("c8.max_outside"),
                format!("{} shots, {outside} outside the admissible kinds; {}", ev.v("shots"), ev.notes.join("; ")),
            )
        }
        9 => {
            let (c64, c128) = (ev.v("boundaries_64"), ev.v("boundaries_128"));
            let width = ev.v("max_bracket");
            let expected = tol.get("c9.boundaries");
            (
                c64 == expected && c128 == c64 && width < tol.get("c9.bracket"),
                format!(
                    "{c64} boundaries on 64 points, {c128} on 128, widest bracket {width:.2e}; {}",
                    ev.notes.join("; ")
                ),
            )
        }
        _ => (false, "not a judged criterion".into()),
    }
}

fn measure_1() -> Measured {
    let params = ProblemParams::single_term(5, 3.0, 0.0).map_err(|e| e.to_string())?;
    let s = 2f64.sqrt();
    let start = Instant::now();
    let traj = integrate(State::new(0.0, s, -s), Frame::RAW, 1000f64.ln(), &params, &IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    let worst = traj
        .samples
        .iter()
        .map(|st| {
            let exact = s * (-st.t).exp();
            ((st.v - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    let mut ev = Evidence::default();
    ev.put("max_rel_err", worst);
    ev.put("seconds", seconds);
    Ok(ev)
}

fn measure_5() -> Measured {
    let params = config_b();
    let dc = derive_constants(&params).map_err(|e| e.to_string())?;
    let l2 = dc.lambda2().map_err(|e| e.to_string())?;
    let traj = integrate(
        State::new(-2.0, l2 + 0.5, 0.0),
        Frame::new(dc.alpha2),
        -40.0,
        &params,
        &IntegratorConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let env = oscillation_envelope(&traj, &dc, End::Origin).map_err(|e| e.to_string())?;
    let report = classify_end(&traj, &dc, End::Origin, &ClassifyOptions::default()).map_err(|e| e.to_string())?;
    let mut ev = Evidence::default();
    ev.put("extrema", env.extrema_count() as f64);
    ev.put("mu1", env.mu1);
    ev.put("mu2", env.mu2);
    ev.put("lambda2", l2);
    ev.put("b_mu1", env.b_mu1);
    ev.put("b_mu2", env.b_mu2);
    ev.put("b_lambda2", potential_b(l2, &dc));
    ev.notes.push(format!("origin classified {}", report.kind));
    Ok(ev)
}

/// Parameters with `-2 < l2 < l1 <= 0` and `(n+l1)/(n-2) < p < q`.
pub fn random_admissible(rng: &mut impl Rng) -> ProblemParams {
    loop {
        let n: u32 = rng.gen_range(3..=6);
        let l1: f64 = rng.gen_range(-1.0..=0.0);
        let l2: f64 = rng.gen_range(-1.8..(l1 - 0.1));
        let serrin = (f64::from(n) + l1) / (f64::from(n) - 2.0);
        let p: f64 = rng.gen_range((serrin + 0.1)..(serrin + 1.5));
        let q: f64 = rng.gen_range((p + 0.05)..(p + 1.0));
        if let Ok(params) = ProblemParams::new(n, p, q, l1, l2) {
            return params;
        }
    }
}

fn measure_7() -> Measured {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ev = Evidence::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..10 {
        let params = random_admissible(&mut rng);
        let dc = derive_constants(&params).map_err(|e| e.to_string())?;
        let runs = [
            (Frame::new(dc.alpha1), dc.lambda1().map_err(|e| e.to_string())?, 2.0, 10.0),
            (Frame::new(dc.alpha2), dc.lambda2().map_err(|e| e.to_string())?, -2.0, -10.0),
        ];
        for (frame, lambda, t0, t1) in runs {
            let traj: Trajectory = integrate(State::new(t0, 1.05 * lambda, 0.0), frame, t1, &params, &IntegratorConfig::default())
                .map_err(|e| e.to_string())?;
            let trace = energy_trace(&traj, &dc).map_err(|e| e.to_string())?;
            worst = worst.max(trace.relative_residual());
            count += 1;
        }
        ev.notes.push(format!(
            "n={} p={:.4} q={:.4} l1={:.4} l2={:.4}",
            params.n, params.p, params.q, params.l1, params.l2
        ));
    }
    ev.put("worst_relative_residual", worst);
    ev.put("trajectories", f64::from(count));
    Ok(ev)
}

fn kind_histogram(kinds: &[Kind]) -> String {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for k in kinds {
        *counts.entry(k.to_string()).or_default() += 1;
    }
    counts.iter().map(|(k, n)| format!("{k} x{n}")).collect::<Vec<_>>().join(", ")
}

fn measure_8() -> Measured {
    let params = config_a();
    let cfg = ShotConfig::default();
    let grid = log_grid(1e-2, 1e2, 50);
    let kinds: Vec<Kind> = grid
        .iter()
        .map(|&a| shoot(a, &params, &cfg).map(|s| s.report.kind))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let outside = kinds
        .iter()
        .filter(|k| !matches!(k, Kind::CrossesZero | Kind::FastDecayRegular | Kind::SlowDecaySingular))
        .count();
    let mut ev = Evidence::default();
    ev.put("shots", kinds.len() as f64);
    ev.put("outside", outside as f64);
    ev.notes.push(kind_histogram(&kinds));
    Ok(ev)
}

fn measure_9() -> Measured {
    let params = config_a();
    let cfg = ShotConfig::default();
    let mut ev = Evidence::default();
    let mut widest: f64 = 0.0;
    for n in [64, 128] {
        let scan = scan_thresholds(&log_grid(1e-2, 1e2, n), &params, &cfg).map_err(|e| e.to_string())?;
        ev.put(&format!("boundaries_{n}"), scan.boundary_count as f64);
        for b in &scan.boundaries {
            widest = widest.max(b.relative_width);
            ev.notes.push(format!("{} -> {} at a* = {:.15e}", b.kind_lo, b.kind_hi, b.a_star));
        }
        ev.notes.push(format!("{n} points: {}", kind_histogram(&scan.kinds)));
        if n == 64 {
            let crossings: Vec<f64> = scan
                .shots
                .iter()
                .filter_map(|s| s.report.note.as_deref())
                .filter_map(|note| note.rsplit(' ').next()?.parse().ok())
                .collect();
            if let (Some(first), Some(last)) = (crossings.first(), crossings.last()) {
                ev.notes.push(format!("zero crossing t from {first:.3} (a = 0.01) to {last:.3} (a = 100)"));
            }
        }
    }
    ev.put("max_bracket", widest);
    Ok(ev)
}

fn measure_10() -> Measured {
    let mut ev = Evidence::default();

    let params = ProblemParams::single_term(5, 3.0, 0.0).map_err(|e| e.to_string())?;
    let s = 2f64.sqrt();
    let exact = integrate(State::new(0.0, s, -s), Frame::RAW, 1000f64.ln(), &params, &IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    let a = config_a();
    let dc = derive_constants(&a).map_err(|e| e.to_string())?;
    let orbit = connecting_orbit(&a, &dc, Direction::FromInfinity, &ConnectConfig::default()).map_err(|e| e.to_string())?;
    let mut round_trip = true;
    for traj in [&exact, &orbit.trajectory] {
        let text = traj.to_csv();
        let back = Trajectory::from_csv(&text, traj.params, traj.config).map_err(|e| e.to_string())?;
        let same_bits = back.samples.len() == traj.samples.len()
            && back.samples.iter().zip(&traj.samples).all(|(x, y)| {
                x.t.to_bits() == y.t.to_bits() && x.v.to_bits() == y.v.to_bits() && x.vdot.to_bits() == y.vdot.to_bits()
            });
        round_trip &= same_bits && back.to_csv() == text;
    }
    ev.flag("csv_round_trip", round_trip);

    let mut cfg = RunConfig::new(a);
    cfg.sweep.p = vec![1.85, 1.9, 1.93];
    cfg.sweep.q = vec![1.95, 1.97, 1.99];
    let dirs = [tempfile::tempdir(), tempfile::tempdir()];
    let mut outputs = Vec::new();
    for (jobs, dir) in [1, 8].into_iter().zip(&dirs) {
        let dir = dir.as_ref().map_err(|e| e.to_string())?;
        let run = sweep(&cfg, jobs).map_err(|e| e.to_string())?;
        run.write(dir.path()).map_err(|e| e.to_string())?;
        let mut files = vec![std::fs::read(dir.path().join("manifest.json")).map_err(|e| e.to_string())?];
        for cell in &run.manifest.cells {
            if let Some(rel) = &cell.trajectory_file {
                files.push(std::fs::read(dir.path().join(rel)).map_err(|e| e.to_string())?);
            }
        }
        ev.put(&format!("cells_jobs_{jobs}"), run.manifest.cells.len() as f64);
        outputs.push(files);
    }
    ev.flag("sweep_deterministic", outputs[0] == outputs[1] && !outputs[0].is_empty());
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_parse_assignments() {
        let mut t = Tolerances::default();
        t.apply("c4.halfwidth=0.05").unwrap();
        assert_eq!(t.get("c4.halfwidth"), 0.05);
        assert!(matches!(t.apply("nope=1"), Err(AcceptanceError::UnknownKey(_))));
        assert!(matches!(t.apply("c4.halfwidth"), Err(AcceptanceError::Assignment(_))));
        assert!(matches!(t.apply("c4.halfwidth=x"), Err(AcceptanceError::Assignment(_))));
    }

    #[test]
    fn every_mutation_key_exists() {
        let t = Tolerances::default();
        for (_, key, _) in MUTATIONS {
            assert!(t.keys().any(|k| k == key));
        }
    }

    #[test]
    fn random_configs_are_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = random_admissible(&mut rng);
            let dc = derive_constants(&p).unwrap();
            assert!(dc.lambda1.is_some() && dc.lambda2.is_some());
            assert!(-2.0 < p.l2 && p.l2 < p.l1 && p.l1 <= 0.0 && dc.serrin1 < p.p && p.p < p.q);
        }
    }

    #[test]
    fn judged_criterion_flips_under_mutation() {
        let suite = Suite::new();
        let tol = Tolerances::default();
        let ok = suite.outcome(1, &tol).unwrap();
        assert!(ok.passed, "{ok}");
        let mut bad = tol.clone();
        bad.set("c1.rel_err", 1e-30).unwrap();
        assert!(!suite.outcome(1, &bad).unwrap().passed);
    }
}
