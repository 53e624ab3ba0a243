//! Perturbation scans and shape descent for the overdetermined condition
//! `|∇v| = c` on the boundary.
//!
//! A scan perturbs a geodesic ball by `ρ(θ) = R(1 + ε cos kθ)` and records how
//! far the boundary gradient is from constant. The descent minimises the
//! length-weighted variance of the boundary gradient over the Fourier
//! coefficients of modes `k ≥ 2`.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::DEFAULT_TOL;
use crate::geometry::{Curvature, DEFAULT_CAP_MARGIN};
use crate::mesh::{FourierMode, StarDomain};
use crate::verify::DomainAnalysis;

pub const SCAN_CSV_HEADER: &str = "eps,c_mean,c_std,P_range,poho_residual";
pub const DESCENT_CSV_HEADER: &str = "iter,J,coeff_norm";

pub const DEFAULT_LEVEL: u32 = 3;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub curvature: Curvature,
    pub radius: f64,
    pub mode: u32,
    pub eps: Vec<f64>,
    pub level: u32,
    pub tol: f64,
    pub cap_margin: f64,
}

impl ScanConfig {
    pub fn new(curvature: Curvature, radius: f64, mode: u32, eps: Vec<f64>) -> Self {
        Self { curvature, radius, mode, eps, level: DEFAULT_LEVEL, tol: DEFAULT_TOL, cap_margin: DEFAULT_CAP_MARGIN }
    }

    fn domain(&self, eps: f64) -> StarDomain {
        StarDomain::new(self.curvature, self.radius, vec![FourierMode::cos(self.mode, eps)])
            .with_cap_margin(self.cap_margin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanStats {
    pub c_mean: f64,
    pub c_std: f64,
    pub p_range: f64,
    pub poho_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub eps: f64,
    pub outcome: std::result::Result<ScanStats, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    /// Statistics of the successful rows, in order.
    pub fn stats(&self) -> Vec<(f64, ScanStats)> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|s| (r.eps, *s))).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SCAN_CSV_HEADER}")?;
        for row in &self.rows {
            match &row.outcome {
                Ok(s) => writeln!(out, "{},{},{},{},{}", row.eps, s.c_mean, s.c_std, s.p_range, s.poho_residual)?,
                Err(_) => writeln!(out, "{},,,,", row.eps)?,
            }
        }
        Ok(())
    }
}

/// Meshes, solves and verifies each perturbation; failures are recorded per row.
pub fn perturbation_scan(config: &ScanConfig) -> Result<ScanResult> {
    if config.mode < 2 {
        return Err(Error::Domain(format!("perturbation mode must be at least 2, got {}", config.mode)));
    }
    if config.eps.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("eps values must be strictly increasing".into()));
    }
    let rows = config
        .eps
        .par_iter()
        .map(|&eps| {
            let outcome = DomainAnalysis::at_level(&config.domain(eps), config.level, config.tol).map(|a| ScanStats {
                c_mean: a.stats.mean,
                c_std: a.stats.std,
                p_range: a.p_range(),
                poho_residual: a.pohozaev.relative_residual,
            });
            ScanRow { eps, outcome }
        })
        .collect();
    Ok(ScanResult { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub curvature: Curvature,
    pub radius: f64,
    pub initial: Vec<FourierMode>,
    pub level: u32,
    pub max_iters: usize,
    pub fd_step: f64,
    pub tol: f64,
    pub cap_margin: f64,
    /// Trial step at the start of every line search.
    pub initial_step: f64,
}

impl DescentConfig {
    pub fn new(curvature: Curvature, radius: f64, initial: Vec<FourierMode>) -> Self {
        Self {
            curvature,
            radius,
            initial,
            level: DEFAULT_LEVEL,
            max_iters: 100,
            fd_step: DEFAULT_FD_STEP,
            tol: DEFAULT_TOL,
            cap_margin: DEFAULT_CAP_MARGIN,
            initial_step: 1.0,
        }
    }
}

/// Snapshot of the descent after an accepted step (or at the start).
#[derive(Debug, Clone, PartialEq)]
pub struct DescentState {
    pub iteration: usize,
    /// `[a_2, b_2, a_3, b_3, …]`
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

impl DescentState {
    /// `Σ |a_k| + |b_k|`.
    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrajectory {
    pub states: Vec<DescentState>,
    pub converged: bool,
}

impl DescentTrajectory {
    pub fn last(&self) -> &DescentState {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{DESCENT_CSV_HEADER}")?;
        for s in &self.states {
            writeln!(out, "{},{},{}", s.iteration, s.objective, s.coefficient_norm())?;
        }
        Ok(())
    }
}

struct Objective<'a> {
    config: &'a DescentConfig,
    max_mode: u32,
}

impl Objective<'_> {
    fn domain(&self, coefficients: &[f64]) -> StarDomain {
        let modes = (2..=self.max_mode)
            .zip(coefficients.chunks(2))
            .map(|(k, ab)| FourierMode { k, cos: ab[0], sin: ab[1] })
            .collect();
        StarDomain::new(self.config.curvature, self.config.radius, modes).with_cap_margin(self.config.cap_margin)
    }

    /// Length-weighted variance of `|∇_g v|` on the boundary.
    fn eval(&self, coefficients: &[f64]) -> Result<f64> {
        let domain = self.domain(coefficients);
        domain.validate()?;
        let analysis = DomainAnalysis::at_level(&domain, self.config.level, self.config.tol)?;
        Ok(analysis.stats.variance())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = self.config.fd_step;
        (0..x.len())
            .into_par_iter()
            .map(|i| {
                let mut plus = x.to_vec();
                let mut minus = x.to_vec();
                plus[i] += h;
                minus[i] -= h;
                Ok((self.eval(&plus)? - self.eval(&minus)?) / (2.0 * h))
            })
            .collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient descent on the boundary-gradient variance with central finite differences
/// and a halving line search.
pub fn shape_descent(config: &DescentConfig) -> Result<DescentTrajectory> {
    if let Some(m) = config.initial.iter().find(|m| m.k < 2) {
        return Err(Error::Domain(format!("descent modes must satisfy k >= 2, got k = {}", m.k)));
    }
    if !(config.fd_step > 0.0) || !(config.initial_step > 0.0) {
        return Err(Error::Domain("fd_step and initial_step must be positive".into()));
    }
    let max_mode = config.initial.iter().map(|m| m.k).max().unwrap_or(2).max(2);
    let objective = Objective { config, max_mode };

    let mut x = vec![0.0; 2 * (max_mode as usize - 1)];
    for m in &config.initial {
        let i = 2 * (m.k as usize - 2);
        x[i] += m.cos;
        x[i + 1] += m.sin;
    }
    let mut value = objective.eval(&x)?;
    let mut step = config.initial_step;
    let mut states = Vec::new();

    for iteration in 0..=config.max_iters {
        let grad = objective.gradient(&x)?;
        let gnorm = norm(&grad);
        states.push(DescentState { iteration, coefficients: x.clone(), objective: value, gradient_norm: gnorm, step });
        if gnorm <= GRADIENT_TOL {
            return Ok(DescentTrajectory { states, converged: true });
        }
        if iteration == config.max_iters {
            break;
        }

        let mut trial = config.initial_step;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - trial * gi).collect();
            // invalid shapes count as a failed decrease
            if let Ok(j) = objective.eval(&candidate) {
                if j < value {
                    accepted = Some((candidate, j));
                    break;
                }
            }
            trial *= 0.5;
        }
        let Some((candidate, j)) = accepted else {
            return Err(Error::LineSearch { iteration, halvings: MAX_HALVINGS });
        };
        x = candidate;
        value = j;
        step = trial;
    }
    Ok(DescentTrajectory { states, converged: false })
}
