//! Run configuration files.
//!
//! Files are TOML: `[section]` headers followed by `key = value` lines.
//! Only `[params]` is required; every other section and key has a default,
//! and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classify::ClassifyOptions;
use crate::integrator::IntegratorConfig;
use crate::params::{ParamError, ProblemParams};
use crate::trajectory::End;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid span: need t_min < t_max, got [{0}, {1}]")]
    Span(f64, f64),
    #[error("invalid integrator settings")]
    Integrator,
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpanConfig {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig { t_min: -30.0, t_max: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    /// Series start with `u(0) = a`.
    Regular,
    /// Seed at a singular end followed by integration to the other end.
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    pub kind: SeedKind,
    pub a: f64,
    pub r0: f64,
    /// Seeded end; `None` follows the regime.
    pub end: Option<End>,
    /// Offset from lambda; `None` means `1e-4 lambda`.
    pub eps: Option<f64>,
    pub forced_response: bool,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            kind: SeedKind::Regular,
            a: 1.0,
            r0: 1e-4,
            end: None,
            eps: None,
            forced_response: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub n: Vec<u32>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ProblemParams,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub span: SpanConfig,
    #[serde(default)]
    pub classify: ClassifyOptions,
    #[serde(default)]
    pub seed: SeedConfig,
    /// Axes of a parameter sweep. An empty axis keeps the value in
    /// `[params]`.
    #[serde(default)]
    pub sweep: SweepGrid,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Fields that determine results; the output location is excluded.
#[derive(Serialize)]
struct Semantic<'a> {
    params: &'a ProblemParams,
    integrator: &'a IntegratorConfig,
    span: &'a SpanConfig,
    classify: &'a ClassifyOptions,
    seed: &'a SeedConfig,
    sweep: &'a SweepGrid,
}

impl RunConfig {
    pub fn new(params: ProblemParams) -> Self {
        RunConfig {
            params,
            integrator: IntegratorConfig::default(),
            span: SpanConfig::default(),
            classify: ClassifyOptions::default(),
            seed: SeedConfig::default(),
            sweep: SweepGrid::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The sweep grid may hold invalid cells, so `[params]` is only
    /// validated when no sweep axis is given.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep_axes_empty() {
            self.params.validate()?;
        }
        if self.integrator.validate().is_err() {
            return Err(ConfigError::Integrator);
        }
        if self.span.t_min.partial_cmp(&self.span.t_max) != Some(std::cmp::Ordering::Less) {
            return Err(ConfigError::Span(self.span.t_min, self.span.t_max));
        }
        Ok(())
    }

    fn sweep_axes_empty(&self) -> bool {
        let g = &self.sweep;
        g.n.is_empty() && g.p.is_empty() && g.q.is_empty() && g.l1.is_empty() && g.l2.is_empty()
    }

    /// SHA-256 of the canonical JSON form of the semantic fields, in hex.
    pub fn hash(&self) -> String {
        let semantic = Semantic {
            params: &self.params,
            integrator: &self.integrator,
            span: &self.span,
            classify: &self.classify,
            seed: &self.seed,
            sweep: &self.sweep,
        };
        let bytes = serde_json::to_vec(&semantic).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_id(&self) -> String {
        self.hash()[..12].to_string()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[params]\nn = 5\np = 1.9\nq = 1.95\nl1 = 0.0\nl2 = -0.5\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.params.k1, 1.0);
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert_eq!(cfg.span, SpanConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(&format!("{MINIMAL}extra = 1\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}[integrator]\nrtoll = 1e-9\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}[bogus]\nx = 1\n")).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = MINIMAL.replace("p = 1.9", "p = 1.0");
        assert!(matches!(RunConfig::parse(&bad), Err(ConfigError::Params(_))));
        assert!(RunConfig::parse(&format!("{MINIMAL}[span]\nt_min = 3.0\nt_max = 1.0\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}[integrator]\nrtol = -1.0\n")).is_err());
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let base = RunConfig::parse(MINIMAL).unwrap();
        let mut moved = base.clone();
        moved.output.dir = PathBuf::from("elsewhere");
        assert_eq!(base.hash(), moved.hash());
        let mut changed = base.clone();
        changed.integrator.rtol = 1e-9;
        assert_ne!(base.hash(), changed.hash());
        let mut changed = base.clone();
        changed.params.q = 1.96;
        assert_ne!(base.hash(), changed.hash());
        assert_eq!(base.run_id().len(), 12);
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.sweep.p = vec![1.85, 1.9];
        cfg.seed.eps = Some(2e-4);
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
}
