//! Single runs and parameter sweeps driven by a [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{classify_end, ClassificationReport, ClassifyError};
use crate::config::{RunConfig, SeedKind};
use crate::params::{classify_regime, derive_constants, DerivedConstants, ProblemParams, RegimeFlags, SingularCase};
use crate::shooting::{
    connecting_orbit, default_direction, regular_trajectory, ConnectConfig, Direction, ShootError,
};
use crate::integrator::gated_series_radius;
use crate::trajectory::{End, Trajectory};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("jobs must be at least 1")]
    Jobs,
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Regular,
    Connect,
}

/// One integrated trajectory with both ends classified.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mode: Mode,
    pub constants: DerivedConstants,
    pub regime: RegimeFlags,
    pub trajectory: Trajectory,
    pub origin: ClassificationReport,
    pub infinity: ClassificationReport,
}

fn connect_config(cfg: &RunConfig, direction: Direction) -> ConnectConfig {
    let (t_seed, t_far) = match direction {
        Direction::FromInfinity => (cfg.span.t_max, cfg.span.t_min),
        Direction::FromOrigin => (cfg.span.t_min, cfg.span.t_max),
    };
    ConnectConfig {
        eps: cfg.seed.eps,
        t_seed: Some(t_seed),
        t_far: Some(t_far),
        forced_response: cfg.seed.forced_response,
        integrator: cfg.integrator,
        classify: cfg.classify,
        ..ConnectConfig::default()
    }
}

fn solve_with(cfg: &RunConfig, params: &ProblemParams, mode: Mode) -> Result<Solution, SweepError> {
    params.validate().map_err(ShootError::from)?;
    let dc = derive_constants(params).map_err(ShootError::from)?;
    let regime = classify_regime(params, &dc);
    match mode {
        Mode::Connect => {
            let direction = match cfg.seed.end {
                Some(End::Infinity) => Direction::FromInfinity,
                Some(End::Origin) => Direction::FromOrigin,
                None => default_direction(params, &dc)?,
            };
            let orbit = connecting_orbit(params, &dc, direction, &connect_config(cfg, direction))?;
            let (origin, infinity) = match direction {
                Direction::FromInfinity => (orbit.far, orbit.near),
                Direction::FromOrigin => (orbit.near, orbit.far),
            };
            Ok(Solution { mode, constants: dc, regime, trajectory: orbit.trajectory, origin, infinity })
        }
        Mode::Regular => {
            let r0 = gated_series_radius(cfg.seed.a, cfg.seed.r0, params).map_err(ShootError::from)?;
            let trajectory =
                regular_trajectory(cfg.seed.a, r0, cfg.span.t_max, params, &dc, &cfg.integrator)
                    .map_err(ShootError::from)?;
            let infinity = classify_end(&trajectory, &dc, End::Infinity, &cfg.classify)?;
            let origin = classify_end(&trajectory, &dc, End::Origin, &cfg.classify)?;
            Ok(Solution { mode, constants: dc, regime, trajectory, origin, infinity })
        }
    }
}

/// Runs the configured seed on `[params]`.
pub fn solve(cfg: &RunConfig) -> Result<Solution, SweepError> {
    let mode = match cfg.seed.kind {
        SeedKind::Regular => Mode::Regular,
        SeedKind::Singular => Mode::Connect,
    };
    solve_with(cfg, &cfg.params, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxes {
    pub n: Vec<u32>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub index: usize,
    pub params: ProblemParams,
    pub ok: bool,
    pub error: Option<String>,
    pub mode: Option<Mode>,
    pub constants: Option<DerivedConstants>,
    pub regime: Option<RegimeFlags>,
    pub origin: Option<ClassificationReport>,
    pub infinity: Option<ClassificationReport>,
    /// Relative to the run directory.
    pub trajectory_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub run_id: String,
    pub axes: SweepAxes,
    pub cells: Vec<CellRecord>,
}

/// Manifest plus the CSV text of each successful cell.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub manifest: SweepManifest,
    pub trajectories: Vec<Option<String>>,
}

impl SweepRun {
    /// Writes `manifest.json` and `cells/<i>/trajectory.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), SweepError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SweepError::Io { path, source }
        };
        for (cell, csv) in self.manifest.cells.iter().zip(&self.trajectories) {
            if let (Some(rel), Some(csv)) = (&cell.trajectory_file, csv) {
                let path = dir.join(rel);
                let parent = path.parent().expect("cell files live in a directory");
                fs::create_dir_all(parent).map_err(io(parent))?;
                fs::write(&path, csv).map_err(io(&path))?;
            }
        }
        let path = dir.join("manifest.json");
        fs::write(&path, crate::json::to_string(&self.manifest)).map_err(io(&path))
    }
}

fn axes(cfg: &RunConfig) -> SweepAxes {
    let g = &cfg.sweep;
    let p = &cfg.params;
    fn or<T: Clone>(axis: &[T], fallback: T) -> Vec<T> {
        if axis.is_empty() {
            vec![fallback]
        } else {
            axis.to_vec()
        }
    }
    SweepAxes {
        n: or(&g.n, p.n),
        p: or(&g.p, p.p),
        q: or(&g.q, p.q),
        l1: or(&g.l1, p.l1),
        l2: or(&g.l2, p.l2),
    }
}

/// Cartesian product in the order n, p, q, l1, l2 (last varies fastest).
fn cells(cfg: &RunConfig, axes: &SweepAxes) -> Vec<ProblemParams> {
    let mut out = Vec::new();
    for &n in &axes.n {
        for &p in &axes.p {
            for &q in &axes.q {
                for &l1 in &axes.l1 {
                    for &l2 in &axes.l2 {
                        out.push(ProblemParams { n, p, q, l1, l2, ..cfg.params });
                    }
                }
            }
        }
    }
    out
}

fn run_cell(cfg: &RunConfig, index: usize, params: ProblemParams) -> (CellRecord, Option<String>) {
    let mut record = CellRecord {
        index,
        params,
        ok: false,
        error: None,
        mode: None,
        constants: None,
        regime: None,
        origin: None,
        infinity: None,
        trajectory_file: None,
    };
    let mode = match params.validate().ok().and_then(|_| derive_constants(&params).ok()) {
        Some(dc) => {
            let single = params.k1 == 0.0 || params.k2 == 0.0;
            if single || classify_regime(&params, &dc).singular_case != SingularCase::None {
                Mode::Connect
            } else {
                Mode::Regular
            }
        }
        None => Mode::Regular,
    };
    match solve_with(cfg, &params, mode) {
        Ok(sol) => {
            record.ok = true;
            record.mode = Some(sol.mode);
            record.constants = Some(sol.constants);
            record.regime = Some(sol.regime);
            record.origin = Some(sol.origin);
            record.infinity = Some(sol.infinity);
            record.trajectory_file = Some(format!("cells/{index}/trajectory.csv"));
            (record, Some(sol.trajectory.to_csv()))
        }
        Err(e) => {
            record.error = Some(e.to_string());
            (record, None)
        }
    }
}

/// Runs every grid cell on a pool of `jobs` workers. Output does not depend
/// on `jobs`.
pub fn sweep(cfg: &RunConfig, jobs: usize) -> Result<SweepRun, SweepError> {
    if jobs == 0 {
        return Err(SweepError::Jobs);
    }
    let axes = axes(cfg);
    let grid = cells(cfg, &axes);
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let results: Vec<(CellRecord, Option<String>)> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, p)| run_cell(cfg, i, *p))
            .collect()
    });
    let (cells, trajectories) = results.into_iter().unzip();
    Ok(SweepRun {
        manifest: SweepManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            run_id: cfg.run_id(),
            axes,
            cells,
        },
        trajectories,
    })
}

/// Result of [`run_sweep`].
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    /// Whether a manifest for this configuration already existed.
    pub reused: bool,
    pub cells: usize,
    pub failed: usize,
}

/// Sweeps into `<out_root>/<run-id>/`. A directory that already holds a
/// manifest is left untouched.
pub fn run_sweep(cfg: &RunConfig, jobs: usize, out_root: &Path) -> Result<SweepOutcome, SweepError> {
    let dir = out_root.join(cfg.run_id());
    if dir.join("manifest.json").is_file() {
        return Ok(SweepOutcome { dir, reused: true, cells: 0, failed: 0 });
    }
    let run = sweep(cfg, jobs)?;
    run.write(&dir)?;
    let failed = run.manifest.cells.iter().filter(|c| !c.ok).count();
    Ok(SweepOutcome { dir, reused: false, cells: run.manifest.cells.len(), failed })
}
