//! Command-line front end. [`run`] returns the process exit code:
//! 0 on success, 1 on numeric failure, 2 on usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::acceptance::{Suite, Tolerances, CRITERIA};
use crate::classify::{classify_end, ClassifyOptions};
use crate::config::RunConfig;
use crate::integrator::IntegratorConfig;
use crate::json;
use crate::params::{classify_regime, derive_constants, ProblemParams};
use crate::shooting::{
    connecting_orbit, default_direction, log_grid, scan_thresholds, shoot, ConnectConfig, Direction, ShotConfig,
};
use crate::sweep::{run_sweep, solve};
use crate::trajectory::{End, Trajectory};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn numeric(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "emden", version, about = "Radial solutions of -Δu = K1 |x|^l1 u^p + K2 |x|^l2 u^q")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, allow_hyphen_values = true)]
    l1: f64,
    #[arg(long, allow_hyphen_values = true)]
    l2: f64,
    /// Weight of the `u^p` term, 0 or 1.
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
    /// Weight of the `u^q` term, 0 or 1.
    #[arg(long, default_value_t = 1.0)]
    k2: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<ProblemParams, CliError> {
        ProblemParams::with_coefficients(self.n, self.p, self.q, self.l1, self.l2, self.k1, self.k2).map_err(usage)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EndArg {
    Origin,
    Infinity,
}

impl From<EndArg> for End {
    fn from(e: EndArg) -> End {
        match e {
            EndArg::Origin => End::Origin,
            EndArg::Infinity => End::Infinity,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    FromInfinity,
    FromOrigin,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived constants and regime flags as JSON.
    Exponents(ParamArgs),
    /// Integrate the configured seed; CSV to `--out` or standard output.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify one end of a trajectory CSV.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        end: EndArg,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Regular shot with `u(0) = a`, classified at infinity.
    Shoot {
        #[arg(long)]
        a: f64,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 12.0)]
        t_end: f64,
        /// Also write the trajectory CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Shots on a log-spaced grid of heights with bisected boundaries.
    Scan {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1e-2)]
        lo: f64,
        #[arg(long, default_value_t = 1e2)]
        hi: f64,
        #[arg(long, default_value_t = 64)]
        points: usize,
    },
    /// Singular connecting orbit between the two equilibria.
    Connect {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        direction: Option<DirectionArg>,
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_seed: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the configured parameter grid into `<out>/<run-id>/`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "EMDEN_JOBS", default_value_t = 1)]
        jobs: usize,
        /// Output root; defaults to `[output] dir` of the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite; nonzero exit if any criterion fails.
    Verify {
        #[arg(long, default_value = "acceptance")]
        suite: String,
        /// Comma-separated criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Tolerance override `key=value`; repeatable.
        #[arg(long)]
        perturb: Vec<String>,
        /// Print the outcomes with their evidence as JSON.
        #[arg(long)]
        json: bool,
    },
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("usage: emden <exponents|solve|classify|shoot|scan|connect|sweep|verify> [options]; see --help");
            }
            e.code()
        }
    }
}

fn emit<T: Serialize + ?Sized>(value: &T) {
    print!("{}", json::to_string(value));
}

fn write_csv(path: &PathBuf, traj: &Trajectory) -> Result<(), CliError> {
    std::fs::write(path, traj.to_csv()).map_err(|e| numeric(format!("cannot write {}: {e}", path.display())))
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Exponents(args) => {
            let params = args.params()?;
            let dc = derive_constants(&params).map_err(usage)?;
            let regime = classify_regime(&params, &dc);
            emit(&serde_json::json!({ "constants": dc, "regime": regime }));
        }
        Command::Solve { config, out } => {
            let cfg = RunConfig::load(&config).map_err(usage)?;
            let solution = solve(&cfg).map_err(numeric)?;
            let report = serde_json::json!({
                "mode": solution.mode,
                "origin": solution.origin,
                "infinity": solution.infinity,
            });
            match out {
                Some(path) => {
                    write_csv(&path, &solution.trajectory)?;
                    emit(&report);
                }
                None => {
                    print!("{}", solution.trajectory.to_csv());
                    eprint!("{}", json::to_string(&report));
                }
            }
        }
        Command::Classify { input, end, params } => {
            let params = params.params()?;
            let dc = derive_constants(&params).map_err(usage)?;
            let text = std::fs::read_to_string(&input).map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;
            let traj = Trajectory::from_csv(&text, params, IntegratorConfig::default()).map_err(usage)?;
            let report = classify_end(&traj, &dc, end.into(), &ClassifyOptions::default()).map_err(numeric)?;
            emit(&report);
        }
        Command::Shoot { a, params, t_end, csv } => {
            let params = params.params()?;
            let cfg = ShotConfig { t_end, ..Default::default() };
            let shot = shoot(a, &params, &cfg).map_err(numeric)?;
            if let (Some(path), Some(traj)) = (csv, &shot.trajectory) {
                write_csv(&path, traj)?;
            }
            emit(&shot);
        }
        Command::Scan { params, lo, hi, points } => {
            let params = params.params()?;
            if !(lo > 0.0 && hi > lo) {
                return Err(usage(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
            }
            let scan = scan_thresholds(&log_grid(lo, hi, points), &params, &ShotConfig::default()).map_err(numeric)?;
            emit(&scan);
        }
        Command::Connect { params, direction, eps, t_seed, csv } => {
            let params = params.params()?;
            let dc = derive_constants(&params).map_err(usage)?;
            let direction = match direction {
                Some(DirectionArg::FromInfinity) => Direction::FromInfinity,
                Some(DirectionArg::FromOrigin) => Direction::FromOrigin,
                None => default_direction(&params, &dc).map_err(numeric)?,
            };
            let cfg = ConnectConfig { eps, t_seed, ..Default::default() };
            let orbit = connecting_orbit(&params, &dc, direction, &cfg).map_err(numeric)?;
            if let Some(path) = csv {
                write_csv(&path, &orbit.trajectory)?;
            }
            emit(&serde_json::json!({
                "direction": orbit.direction,
                "seed_offset": orbit.seed_offset,
                "seed": orbit.seed,
                "near_window": orbit.near_window,
                "far_window": orbit.far_window,
                "near": orbit.near,
                "far": orbit.far,
            }));
        }
        Command::Sweep { config, jobs, out } => {
            let cfg = RunConfig::load(&config).map_err(usage)?;
            let root = out.unwrap_or_else(|| cfg.output.dir.clone());
            let outcome = run_sweep(&cfg, jobs, &root).map_err(numeric)?;
            emit(&serde_json::json!({
                "dir": outcome.dir,
                "reused": outcome.reused,
                "cells": outcome.cells,
                "failed": outcome.failed,
            }));
        }
        Command::Verify { suite, only, perturb, json: as_json } => {
            if suite != "acceptance" {
                return Err(usage(format!("unknown suite {suite:?}; the only suite is \"acceptance\"")));
            }
            let mut tol = Tolerances::default();
            for assignment in &perturb {
                tol.apply(assignment).map_err(usage)?;
            }
            let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|(id, _)| *id).collect() } else { only };
            let outcomes = Suite::new().run(&ids, &tol).map_err(usage)?;
            if as_json {
                emit(&outcomes);
            } else {
                let mut stdout = std::io::stdout().lock();
                for outcome in &outcomes {
                    let _ = writeln!(stdout, "{outcome}");
                }
                let passed = outcomes.iter().filter(|o| o.passed).count();
                let _ = writeln!(stdout, "{passed}/{} criteria passed", outcomes.len());
            }
            return Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 1 });
        }
    }
    Ok(0)
}
