//! Run configuration: JSON file merged with command-line flags, flags winning.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::Deserialize;
use serrin_core::mesh::FourierMode;
use serrin_core::Curvature;

pub const DEFAULT_LEVEL: u32 = 3;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_DELTA: f64 = 1e-2;
pub const DEFAULT_MODE: u32 = 3;
pub const DEFAULT_EPS: [f64; 4] = [0.0, 0.05, 0.1, 0.2];
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const DEFAULT_OUT_DIR: &str = "out";
/// Level 7 already means ~4M triangles; anything above is a typo.
pub const MAX_LEVEL: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Closed-form radial solution summary.
    Radial,
    /// Radial identity suite plus the Obata and eigenfunction checks.
    Identities,
    /// Mesh and solve; writes field.csv and boundary.csv.
    Solve,
    /// Mesh, solve and verify; writes report.json.
    Verify,
    /// Perturbation scan over eps; writes scan.csv.
    Scan,
    /// Shape descent on the boundary-gradient variance; writes descent.csv.
    Descent,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Radial => "radial",
            Command::Identities => "identities",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Scan => "scan",
            Command::Descent => "descent",
        }
    }

    fn needs_mesh(self) -> bool {
        !matches!(self, Command::Radial | Command::Identities)
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config file, then defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Sectional curvature: -1, 0 or 1.
    #[arg(long = "K", allow_hyphen_values = true, global = true)]
    pub k: Option<i64>,
    /// Dimension (meshed commands require 2).
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    /// Geodesic radius of the base ball.
    #[arg(long = "R", allow_hyphen_values = true, global = true)]
    pub r: Option<f64>,
    /// Fourier perturbation as "k:a_k" pairs, e.g. "3:0.1,2:-0.05".
    #[arg(long, allow_hyphen_values = true, global = true)]
    pub coeffs: Option<String>,
    /// Mesh level (default 3).
    #[arg(long, global = true)]
    pub level: Option<u32>,
    /// Relative residual tolerance for CG (default 1e-10).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Hemisphere margin: K = 1 domains must stay within π/2 − delta (default 1e-2).
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Output directory (default "out").
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Scan: perturbation mode k (default 3).
    #[arg(long, global = true)]
    pub mode: Option<u32>,
    /// Scan: comma-separated eps values (default "0,0.05,0.1,0.2").
    #[arg(long, allow_hyphen_values = true, global = true)]
    pub eps: Option<String>,
    /// Descent: iteration cap (default 100).
    #[arg(long = "max-iters", global = true)]
    pub max_iters: Option<usize>,
    /// Descent: central-difference step (default 1e-3).
    #[arg(long = "fd-step", global = true)]
    pub fd_step: Option<f64>,
}

/// Keys accepted in a JSON configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    #[serde(rename = "K")]
    pub k: Option<i64>,
    pub n: Option<usize>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub coeffs: Option<String>,
    pub level: Option<u32>,
    pub tol: Option<f64>,
    pub delta: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub mode: Option<u32>,
    pub eps: Option<Vec<f64>>,
    pub max_iters: Option<usize>,
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub curvature: Curvature,
    pub n: usize,
    pub radius: f64,
    pub modes: Vec<FourierMode>,
    pub level: u32,
    pub tol: f64,
    pub delta: f64,
    pub out_dir: PathBuf,
    pub mode: u32,
    pub eps: Vec<f64>,
    pub max_iters: usize,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// The config file could not be read.
    Io(String),
    /// A key has an unacceptable value or the file does not parse.
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { key: key.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(msg) => f.write_str(msg),
            ConfigError::Invalid { key, message } => write!(f, "invalid value for {key}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn read_file_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::invalid("config", e.to_string()))
}

/// Parses `"k:a_k,k:a_k"`; an empty string means the unperturbed ball.
pub fn parse_coeffs(text: &str) -> Result<Vec<FourierMode>, ConfigError> {
    let mut modes: Vec<FourierMode> = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, a) = item
            .split_once(':')
            .ok_or_else(|| ConfigError::invalid("coeffs", format!("expected k:a_k, got {item:?}")))?;
        let k: u32 = k
            .trim()
            .parse()
            .map_err(|_| ConfigError::invalid("coeffs", format!("mode {k:?} is not a non-negative integer")))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| ConfigError::invalid("coeffs", format!("coefficient {a:?} is not a number")))?;
        if k == 0 {
            return Err(ConfigError::invalid("coeffs", "mode 0 is the radius; use R"));
        }
        if !a.is_finite() {
            return Err(ConfigError::invalid("coeffs", format!("coefficient for mode {k} is not finite")));
        }
        if modes.iter().any(|m| m.k == k) {
            return Err(ConfigError::invalid("coeffs", format!("mode {k} given twice")));
        }
        modes.push(FourierMode::cos(k, a));
    }
    modes.sort_by_key(|m| m.k);
    Ok(modes)
}

fn parse_eps(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| ConfigError::invalid("eps", format!("{s:?} is not a number"))))
        .collect()
}

/// Merges flags over the optional config file and validates every key.
pub fn parse_config(command: Command, flags: &Flags) -> Result<RunConfig, ConfigError> {
    let file = match &flags.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };
    if let Some(name) = &file.command {
        if name != command.name() {
            return Err(ConfigError::invalid(
                "command",
                format!("config is for {name:?} but {:?} was invoked", command.name()),
            ));
        }
    }

    let k = flags.k.or(file.k).unwrap_or(0);
    let curvature = Curvature::try_from(k).map_err(|_| ConfigError::invalid("K", "K must be -1, 0, or 1"))?;

    let n = flags.n.or(file.n).unwrap_or(2);
    if n < 2 {
        return Err(ConfigError::invalid("n", format!("dimension must be at least 2, got {n}")));
    }
    if command.needs_mesh() && n != 2 {
        return Err(ConfigError::invalid("n", format!("{} meshes the plane and needs n = 2, got {n}", command.name())));
    }

    let delta = flags.delta.or(file.delta).unwrap_or(DEFAULT_DELTA);
    if !(0.0..FRAC_PI_2).contains(&delta) {
        return Err(ConfigError::invalid("delta", format!("must lie in [0, π/2), got {delta}")));
    }

    let radius = flags.r.or(file.r).unwrap_or(1.0);
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(ConfigError::invalid("R", format!("must be positive and finite, got {radius}")));
    }
    if curvature == Curvature::Spherical && radius > FRAC_PI_2 - delta {
        return Err(ConfigError::invalid(
            "R",
            format!("K = 1 needs R <= π/2 − delta = {}, got {radius}", FRAC_PI_2 - delta),
        ));
    }

    let modes = match flags.coeffs.as_deref().or(file.coeffs.as_deref()) {
        Some(text) => parse_coeffs(text)?,
        None => Vec::new(),
    };

    let level = flags.level.or(file.level).unwrap_or(DEFAULT_LEVEL);
    if level > MAX_LEVEL {
        return Err(ConfigError::invalid("level", format!("must be at most {MAX_LEVEL}, got {level}")));
    }

    let tol = flags.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(ConfigError::invalid("tol", format!("must lie in (0, 1), got {tol}")));
    }

    let mode = flags.mode.or(file.mode).unwrap_or(DEFAULT_MODE);
    if mode < 2 {
        return Err(ConfigError::invalid("mode", format!("must be at least 2, got {mode}")));
    }

    let eps = match (&flags.eps, file.eps) {
        (Some(text), _) => parse_eps(text)?,
        (None, Some(list)) => list,
        (None, None) => DEFAULT_EPS.to_vec(),
    };
    if eps.is_empty() {
        return Err(ConfigError::invalid("eps", "at least one value is required"));
    }
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(ConfigError::invalid("eps", "values must be finite"));
    }
    if eps.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ConfigError::invalid("eps", "values must be strictly increasing"));
    }

    let max_iters = flags.max_iters.or(file.max_iters).unwrap_or(DEFAULT_MAX_ITERS);
    let fd_step = flags.fd_step.or(file.fd_step).unwrap_or(DEFAULT_FD_STEP);
    if !(fd_step > 0.0) || !fd_step.is_finite() {
        return Err(ConfigError::invalid("fd-step", format!("must be positive, got {fd_step}")));
    }
    if command == Command::Descent && modes.iter().any(|m| m.k < 2) {
        return Err(ConfigError::invalid("coeffs", "descent only moves modes k >= 2"));
    }

    let out_dir = flags.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    Ok(RunConfig { command, curvature, n, radius, modes, level, tol, delta, out_dir, mode, eps, max_iters, fd_step })
}
