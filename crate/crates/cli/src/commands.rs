use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serrin_core::fem::riemannian_norm;
use serrin_core::mesh::{mesh_quality, StarDomain, MIN_ANGLE_WARNING_DEG};
use serrin_core::radial::{
    hemisphere_eigen_residual, hessian_proportionality_residual, identity_suite_radial, obata_convergence_order,
    obata_ode_solve, p_constancy_residual, pohozaev_ball_check, radial_pde_residual, RadialSolution,
};
use serrin_core::rigidity::{perturbation_scan, shape_descent, DescentConfig, ScanConfig};
use serrin_core::verify::DomainAnalysis;
use serrin_core::{Curvature, SpaceForm};

use crate::config::{Command, ConfigError, RunConfig};

const RADIAL_SAMPLES: usize = 1000;
const POHOZAEV_POINTS: usize = 64;
const OBATA_STEP: f64 = 1e-3;
const OBATA_ORDER_STEP: f64 = 0.05;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(serrin_core::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io(_)) | CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_solver_failure() => 3,
            CliError::Core(_) => 2,
        }
    }

    /// Stable prefix for the one-line error report.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(ConfigError::Io(_)) | CliError::Io(_) => "E_IO",
            CliError::Config(_) => "E_CONFIG",
            CliError::Core(e) if e.is_solver_failure() => "E_SOLVER",
            CliError::Core(_) => "E_DOMAIN",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => f.write_str(e),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<serrin_core::Error> for CliError {
    fn from(e: serrin_core::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_context(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).map_err(io_context(dir))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_context(&path))?;
    Ok((path, BufWriter::new(file)))
}

fn write_file(dir: &Path, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CliResult<PathBuf> {
    let (path, mut out) = create(dir, name)?;
    fill(&mut out).and_then(|_| out.flush()).map_err(io_context(&path))?;
    Ok(path)
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// Solves on the configured domain, warning on stderr about thin triangles.
fn analyse(cfg: &RunConfig) -> CliResult<DomainAnalysis> {
    let analysis = DomainAnalysis::at_level(&domain(cfg)?, cfg.level, cfg.tol)?;
    let quality = mesh_quality(&analysis.mesh);
    if quality.is_degenerate() {
        eprintln!(
            "warning: minimum triangle angle {:.2} deg is below {MIN_ANGLE_WARNING_DEG} deg",
            quality.min_angle_deg
        );
    }
    Ok(analysis)
}

fn domain(cfg: &RunConfig) -> CliResult<StarDomain> {
    let d = StarDomain::new(cfg.curvature, cfg.radius, cfg.modes.clone()).with_cap_margin(cfg.delta);
    d.validate()?;
    Ok(d)
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    match cfg.command {
        Command::Radial => radial(cfg),
        Command::Identities => identities(cfg),
        Command::Solve => solve(cfg),
        Command::Verify => verify(cfg),
        Command::Scan => scan(cfg),
        Command::Descent => descent(cfg),
    }
}

#[derive(Serialize)]
struct RadialSummary {
    #[serde(rename = "K")]
    k: i64,
    n: usize,
    #[serde(rename = "R")]
    r: f64,
    v0: f64,
    c: f64,
    pohozaev_lhs: f64,
    pohozaev_rhs: f64,
    poho_residual: f64,
}

fn radial_solution(cfg: &RunConfig) -> CliResult<RadialSolution> {
    let form = SpaceForm::new(cfg.curvature, cfg.n)?;
    Ok(RadialSolution::with_cap_margin(form, cfg.radius, cfg.delta)?)
}

fn radial(cfg: &RunConfig) -> CliResult<()> {
    let sol = radial_solution(cfg)?;
    let balance = pohozaev_ball_check(&sol, POHOZAEV_POINTS)?;
    print_json(&RadialSummary {
        k: cfg.curvature.as_int(),
        n: cfg.n,
        r: cfg.radius,
        v0: sol.center_value(),
        c: sol.c(),
        pohozaev_lhs: balance.lhs,
        pohozaev_rhs: balance.rhs,
        poho_residual: balance.relative_residual,
    })
}

#[derive(Serialize)]
struct IdentitySummary {
    #[serde(rename = "K")]
    k: i64,
    n: usize,
    #[serde(rename = "R")]
    r: f64,
    pde_residual: f64,
    hessian_residual: f64,
    p_constancy_residual: f64,
    bochner_residual: f64,
    weighted_divergence_residual: f64,
    pohozaev_divergence_residual: f64,
    eigenfunction_residual: f64,
    max_residual: f64,
    obata_sup_error: f64,
    /// `null` for K = 0, where RK4 integrates the quadratic solution exactly.
    obata_order: Option<f64>,
}

fn identities(cfg: &RunConfig) -> CliResult<()> {
    let sol = radial_solution(cfg)?;
    let form = sol.form();
    let suite = identity_suite_radial(&sol, RADIAL_SAMPLES);
    let eigen = hemisphere_eigen_residual(cfg.n, RADIAL_SAMPLES);
    let residuals = [
        radial_pde_residual(&sol, RADIAL_SAMPLES),
        hessian_proportionality_residual(&sol, RADIAL_SAMPLES),
        p_constancy_residual(&sol, RADIAL_SAMPLES),
        suite.bochner,
        suite.weighted_divergence,
        suite.pohozaev,
        eigen.residual,
    ];
    let obata = obata_ode_solve(form, sol.center_value(), cfg.radius, OBATA_STEP)?;
    let obata_order = match cfg.curvature {
        Curvature::Flat => None,
        _ => Some(obata_convergence_order(form, sol.center_value(), cfg.radius, OBATA_ORDER_STEP)?),
    };
    print_json(&IdentitySummary {
        k: cfg.curvature.as_int(),
        n: cfg.n,
        r: cfg.radius,
        pde_residual: residuals[0],
        hessian_residual: residuals[1],
        p_constancy_residual: residuals[2],
        bochner_residual: residuals[3],
        weighted_divergence_residual: residuals[4],
        pohozaev_divergence_residual: residuals[5],
        eigenfunction_residual: residuals[6],
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        obata_sup_error: obata.sup_error(),
        obata_order,
    })
}

#[derive(Serialize)]
struct SolveSummary {
    nodes: usize,
    triangles: usize,
    iterations: usize,
    relative_residual: f64,
    v_max: f64,
    files: Vec<String>,
}

fn solve(cfg: &RunConfig) -> CliResult<()> {
    let analysis = analyse(cfg)?;
    let mesh = &analysis.mesh;
    let k = mesh.curvature();

    let field = write_file(&cfg.out_dir, "field.csv", |out| {
        writeln!(out, "x,y,v,P,grad_norm_g")?;
        for (i, x) in mesh.nodes.iter().enumerate() {
            let g = riemannian_norm(k, *x, analysis.gradients[i]);
            writeln!(out, "{},{},{},{},{}", x[0], x[1], analysis.solved.field.values[i], analysis.p.values[i], g)?;
        }
        Ok(())
    })?;
    let boundary = write_file(&cfg.out_dir, "boundary.csv", |out| {
        writeln!(out, "theta,rho,grad_norm_g,P")?;
        for (b, trace) in mesh.boundary.iter().zip(&analysis.trace) {
            writeln!(out, "{},{},{},{}", b.theta, mesh.domain.rho(b.theta), trace, analysis.p.values[b.node])?;
        }
        Ok(())
    })?;

    print_json(&SolveSummary {
        nodes: mesh.num_nodes(),
        triangles: mesh.triangles.len(),
        iterations: analysis.solved.iterations,
        relative_residual: analysis.solved.relative_residual,
        v_max: analysis.solved.field.max(),
        files: vec![field.display().to_string(), boundary.display().to_string()],
    })
}

fn verify(cfg: &RunConfig) -> CliResult<()> {
    let analysis = analyse(cfg)?;
    let report = analysis.report();
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&cfg.out_dir, "report.json", |out| writeln!(out, "{text}"))?;
    println!("{text}");
    Ok(())
}

fn scan(cfg: &RunConfig) -> CliResult<()> {
    if !cfg.modes.is_empty() {
        return Err(ConfigError::Invalid {
            key: "coeffs".into(),
            message: "scan perturbs the ball itself; use --mode and --eps".into(),
        }
        .into());
    }
    let scan_cfg = ScanConfig {
        level: cfg.level,
        tol: cfg.tol,
        cap_margin: cfg.delta,
        ..ScanConfig::new(cfg.curvature, cfg.radius, cfg.mode, cfg.eps.clone())
    };
    let result = perturbation_scan(&scan_cfg)?;
    let path = write_file(&cfg.out_dir, "scan.csv", |out| result.write_csv(out))?;
    println!("{}", path.display());

    let mut first_failure = None;
    for row in &result.rows {
        if let Err(e) = &row.outcome {
            eprintln!("warning: eps = {} failed: {e}", row.eps);
            first_failure.get_or_insert_with(|| e.clone());
        }
    }
    match first_failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct DescentSummary {
    iterations: usize,
    converged: bool,
    #[serde(rename = "J")]
    j: f64,
    coeff_norm: f64,
    gradient_norm: f64,
    coefficients: Vec<f64>,
    file: String,
}

fn descent(cfg: &RunConfig) -> CliResult<()> {
    domain(cfg)?;
    let descent_cfg = DescentConfig {
        level: cfg.level,
        max_iters: cfg.max_iters,
        fd_step: cfg.fd_step,
        tol: cfg.tol,
        cap_margin: cfg.delta,
        ..DescentConfig::new(cfg.curvature, cfg.radius, cfg.modes.clone())
    };
    let trajectory = shape_descent(&descent_cfg)?;
    let path = write_file(&cfg.out_dir, "descent.csv", |out| trajectory.write_csv(out))?;
    let last = trajectory.last();
    print_json(&DescentSummary {
        iterations: last.iteration,
        converged: trajectory.converged,
        j: last.objective,
        coeff_norm: last.coefficient_norm(),
        gradient_norm: last.gradient_norm,
        coefficients: last.coefficients.clone(),
        file: path.display().to_string(),
    })
}
