//! Diagnostics computed from a solved field: the P-function, its maximum
//! principle, boundary-gradient statistics, the integral balance on the
//! domain, and errors against the radial closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{boundary_gradient_trace, recover_gradient, riemannian_norm, solve_on_mesh, Field, Solved};
use crate::geometry::{conformal_factor_at, geodesic_radius_unchecked, profile_unchecked, SpaceForm};
use crate::mesh::{mesh_at_level, StarDomain, TriMesh};
use crate::radial::{PohozaevBalance, RadialSolution};

/// Nodal `P = λ⁻²|∇v|² + (2/n) v + K v²`.
pub fn p_function(field: &Field, gradients: &[[f64; 2]], mesh: &TriMesh, n: usize) -> Field {
    let k = mesh.curvature();
    let (nf, kv) = (n as f64, k.value());
    let values = field
        .values
        .iter()
        .zip(gradients)
        .zip(&mesh.nodes)
        .map(|((&v, &g), &x)| {
            let grad = riemannian_norm(k, x, g);
            grad * grad + 2.0 / nf * v + kv * v * v
        })
        .collect();
    Field { values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrincipleReport {
    /// Max of P over non-boundary nodes.
    pub interior_max: f64,
    pub boundary_max: f64,
    /// `interior_max − boundary_max`; subharmonicity keeps this at or below the mesh tolerance.
    pub margin: f64,
    /// Max of P over nodes that do not share a triangle with the boundary.
    pub deep_interior_max: f64,
}

pub fn max_principle_report(p: &Field, mesh: &TriMesh) -> MaxPrincipleReport {
    let layer = mesh.boundary_layer();
    let mut interior_max = f64::NEG_INFINITY;
    let mut boundary_max = f64::NEG_INFINITY;
    let mut deep_interior_max = f64::NEG_INFINITY;
    for (i, &value) in p.values.iter().enumerate() {
        if mesh.is_boundary[i] {
            boundary_max = boundary_max.max(value);
        } else {
            interior_max = interior_max.max(value);
            if !layer[i] {
                deep_interior_max = deep_interior_max.max(value);
            }
        }
    }
    MaxPrincipleReport { interior_max, boundary_max, margin: interior_max - boundary_max, deep_interior_max }
}

/// Length-weighted statistics of the boundary trace `|∇_g v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStats {
    pub mean: f64,
    /// Population standard deviation; its square is the rigidity objective.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl BoundaryStats {
    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Each boundary node carries half of the Riemannian length of its two adjacent segments.
pub fn boundary_stats(trace: &[f64], mesh: &TriMesh) -> BoundaryStats {
    let m = mesh.boundary.len();
    assert_eq!(trace.len(), m, "trace does not match the mesh boundary");
    let seg: Vec<f64> = (0..m).map(|i| mesh.boundary_segment_length(i)).collect();
    let weights: Vec<f64> = (0..m).map(|i| 0.5 * (seg[(i + m - 1) % m] + seg[i])).collect();
    let total: f64 = weights.iter().sum();
    let mean = trace.iter().zip(&weights).map(|(t, w)| t * w).sum::<f64>() / total;
    let variance = trace.iter().zip(&weights).map(|(t, w)| w * (t - mean).powi(2)).sum::<f64>() / total;
    BoundaryStats {
        mean,
        std: variance.sqrt(),
        min: trace.iter().copied().fold(f64::INFINITY, f64::min),
        max: trace.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Both sides of `c² ∫ḣ = (1 + 2/n)(∫ḣ v − K ∫ h v v_r)` on the mesh, with `c` the
/// length-weighted boundary mean of `|∇_g v|`.
pub fn pohozaev_integrals_2d(field: &Field, gradients: &[[f64; 2]], mesh: &TriMesh, n: usize) -> PohozaevBalance {
    let trace = boundary_gradient_trace(gradients, mesh);
    let c = boundary_stats(&trace, mesh).mean;
    let k = mesh.curvature();
    let (nf, kv) = (n as f64, k.value());

    let (mut i1, mut i2, mut i3) = (0.0, 0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(t);
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let (ia, ib) = (tri[a], tri[b]);
            let (xa, xb) = (mesh.nodes[ia], mesh.nodes[ib]);
            let x = [0.5 * (xa[0] + xb[0]), 0.5 * (xa[1] + xb[1])];
            let s = x[0].hypot(x[1]);
            let lambda = conformal_factor_at(k, s);
            let profile = profile_unchecked(k, geodesic_radius_unchecked(k, s));
            let v = 0.5 * (field.values[ia] + field.values[ib]);
            let g = [0.5 * (gradients[ia][0] + gradients[ib][0]), 0.5 * (gradients[ia][1] + gradients[ib][1])];
            let v_r = if s > 0.0 { (g[0] * x[0] + g[1] * x[1]) / (s * lambda) } else { 0.0 };
            let w = area / 3.0 * lambda * lambda;
            i1 += w * profile.dh;
            i2 += w * profile.dh * v;
            i3 += w * profile.h * v * v_r;
        }
    }
    PohozaevBalance::new(c * c * i1, (1.0 + 2.0 / nf) * (i2 - kv * i3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialErrors {
    pub linf: f64,
    pub l2: f64,
}

/// Nodewise comparison with the closed-form solution on the ball of radius `radius`.
pub fn compare_to_radial(field: &Field, mesh: &TriMesh, n: usize, radius: f64) -> Result<RadialErrors> {
    let domain = &mesh.domain;
    if !domain.is_ball() || (domain.radius - radius).abs() > 1e-12 {
        return Err(Error::Mismatch(format!(
            "mesh domain is not the ball of radius {radius} (a0 = {}, modes = {:?})",
            domain.radius, domain.modes
        )));
    }
    let form = SpaceForm::new(mesh.curvature(), n)?;
    let exact = RadialSolution::with_cap_margin(form, radius, domain.cap_margin)?;
    let err: Vec<f64> =
        (0..mesh.num_nodes()).map(|i| field.values[i] - exact.value(mesh.geodesic_radius_of(i))).collect();
    let linf = err.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let k = mesh.curvature();
    let mut l2 = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(t);
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let (xa, xb) = (mesh.nodes[tri[a]], mesh.nodes[tri[b]]);
            let s = (0.5 * (xa[0] + xb[0])).hypot(0.5 * (xa[1] + xb[1]));
            let lambda = conformal_factor_at(k, s);
            let e = 0.5 * (err[tri[a]] + err[tri[b]]);
            l2 += area / 3.0 * lambda * lambda * e * e;
        }
    }
    Ok(RadialErrors { linf, l2: l2.sqrt() })
}

/// Flat summary of one solved domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub c_mean: f64,
    pub c_std: f64,
    #[serde(rename = "P_boundary_max")]
    pub p_boundary_max: f64,
    #[serde(rename = "P_interior_max")]
    pub p_interior_max: f64,
    #[serde(rename = "P_min")]
    pub p_min: f64,
    pub pohozaev_lhs: f64,
    pub pohozaev_rhs: f64,
    pub pohozaev_relative_residual: f64,
    /// Present only when the domain is a ball.
    pub linf_error: Option<f64>,
}

/// Everything derived from one mesh solve.
#[derive(Debug, Clone)]
pub struct DomainAnalysis {
    pub mesh: TriMesh,
    pub solved: Solved,
    pub gradients: Vec<[f64; 2]>,
    pub p: Field,
    pub trace: Vec<f64>,
    pub stats: BoundaryStats,
    pub max_principle: MaxPrincipleReport,
    pub pohozaev: PohozaevBalance,
    pub radial_errors: Option<RadialErrors>,
}

impl DomainAnalysis {
    pub fn from_mesh(mesh: TriMesh, tol: f64) -> Result<Self> {
        let n = crate::fem::MESH_DIMENSION;
        let solved = solve_on_mesh(&mesh, tol)?;
        let gradients = recover_gradient(&solved.field, &mesh);
        let p = p_function(&solved.field, &gradients, &mesh, n);
        let trace = boundary_gradient_trace(&gradients, &mesh);
        let stats = boundary_stats(&trace, &mesh);
        let max_principle = max_principle_report(&p, &mesh);
        let pohozaev = pohozaev_integrals_2d(&solved.field, &gradients, &mesh, n);
        let radial_errors = if mesh.domain.is_ball() {
            Some(compare_to_radial(&solved.field, &mesh, n, mesh.domain.radius)?)
        } else {
            None
        };
        Ok(Self { mesh, solved, gradients, p, trace, stats, max_principle, pohozaev, radial_errors })
    }

    pub fn at_level(domain: &StarDomain, level: u32, tol: f64) -> Result<Self> {
        Self::from_mesh(mesh_at_level(domain, level)?, tol)
    }

    pub fn p_range(&self) -> f64 {
        self.p.max() - self.p.min()
    }

    pub fn report(&self) -> VerifyReport {
        VerifyReport {
            c_mean: self.stats.mean,
            c_std: self.stats.std,
            p_boundary_max: self.max_principle.boundary_max,
            p_interior_max: self.max_principle.interior_max,
            p_min: self.p.min(),
            pohozaev_lhs: self.pohozaev.lhs,
            pohozaev_rhs: self.pohozaev.rhs,
            pohozaev_relative_residual: self.pohozaev.relative_residual,
            linf_error: self.radial_errors.map(|e| e.linf),
        }
    }
}
