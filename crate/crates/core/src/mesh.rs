//! Structured polar triangulations of star-shaped geodesic domains in the
//! planar conformal charts.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    conformal_factor_at, conformal_weight, geodesic_radius_unchecked, model_radius_unchecked, Curvature,
    DEFAULT_CAP_MARGIN,
};

/// Base resolution of level 0; every level doubles both counts.
pub const BASE_RINGS: usize = 32;
pub const BASE_SECTORS: usize = 16;

/// Triangles with a smaller angle (degrees) are reported as degenerate.
pub const MIN_ANGLE_WARNING_DEG: f64 = 10.0;

/// Number of samples used when checking positivity and the cap bound of `ρ`.
const VALIDATION_SAMPLES: usize = 4096;

/// One Fourier mode `a_k cos kθ + b_k sin kθ` of the relative boundary perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

impl FourierMode {
    pub fn cos(k: u32, a: f64) -> Self {
        Self { k, cos: a, sin: 0.0 }
    }
}

/// Star-shaped domain `{(r, θ) : r < ρ(θ)}` with
/// `ρ(θ) = a₀ (1 + Σ a_k cos kθ + b_k sin kθ)` in geodesic units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarDomain {
    pub curvature: Curvature,
    pub radius: f64,
    pub modes: Vec<FourierMode>,
    pub cap_margin: f64,
}

impl StarDomain {
    pub fn ball(curvature: Curvature, radius: f64) -> Self {
        Self::new(curvature, radius, Vec::new())
    }

    pub fn new(curvature: Curvature, radius: f64, modes: Vec<FourierMode>) -> Self {
        Self { curvature, radius, modes, cap_margin: DEFAULT_CAP_MARGIN }
    }

    pub fn with_cap_margin(mut self, margin: f64) -> Self {
        self.cap_margin = margin;
        self
    }

    pub fn rho(&self, theta: f64) -> f64 {
        let series: f64 = self
            .modes
            .iter()
            .map(|m| {
                let (s, c) = (m.k as f64 * theta).sin_cos();
                m.cos * c + m.sin * s
            })
            .sum();
        self.radius * (1.0 + series)
    }

    pub fn rho_derivative(&self, theta: f64) -> f64 {
        let series: f64 = self
            .modes
            .iter()
            .map(|m| {
                let k = m.k as f64;
                let (s, c) = (k * theta).sin_cos();
                k * (m.sin * c - m.cos * s)
            })
            .sum();
        self.radius * series
    }

    /// True when every non-constant coefficient vanishes (to 1e-12).
    pub fn is_ball(&self) -> bool {
        self.modes.iter().all(|m| m.cos.abs() <= 1e-12 && m.sin.abs() <= 1e-12)
    }

    /// Sum of absolute Fourier coefficients of modes `k ≥ 2`.
    pub fn coefficient_norm(&self) -> f64 {
        self.modes.iter().filter(|m| m.k >= 2).map(|m| m.cos.abs() + m.sin.abs()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidDomain(format!("a0 must be positive, got {}", self.radius)));
        }
        if !(self.cap_margin >= 0.0) {
            return Err(Error::InvalidDomain("cap margin must be non-negative".into()));
        }
        let samples = VALIDATION_SAMPLES * self.modes.iter().map(|m| m.k as usize).max().unwrap_or(1).max(1);
        let mut max_rho = f64::NEG_INFINITY;
        for i in 0..samples {
            let theta = TAU * i as f64 / samples as f64;
            let rho = self.rho(theta);
            if !(rho > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "boundary radius is not positive at θ = {theta:.6} (ρ = {rho})"
                )));
            }
            max_rho = max_rho.max(rho);
        }
        self.curvature.check_cap(max_rho, self.cap_margin)
    }

    /// Model-plane point at geodesic polar coordinates `(r, θ)`.
    fn model_point(&self, r: f64, theta: f64) -> [f64; 2] {
        let s = model_radius_unchecked(self.curvature, r);
        let (sn, cs) = theta.sin_cos();
        [s * cs, s * sn]
    }

    /// Outward unit normal of the boundary curve `θ ↦ model point of (ρ(θ), θ)`.
    fn boundary_normal(&self, theta: f64) -> [f64; 2] {
        let rho = self.rho(theta);
        let s = model_radius_unchecked(self.curvature, rho);
        let ds = self.rho_derivative(theta) / conformal_factor_at(self.curvature, s);
        let (sn, cs) = theta.sin_cos();
        let tangent = [ds * cs - s * sn, ds * sn + s * cs];
        let norm = tangent[0].hypot(tangent[1]);
        [tangent[1] / norm, -tangent[0] / norm]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub theta: f64,
    /// Outward unit normal in the model plane; conformality makes it the geodesic normal direction too.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub domain: StarDomain,
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise index triples.
    pub triangles: Vec<[usize; 3]>,
    pub is_boundary: Vec<bool>,
    /// Boundary nodes sorted by `θ`.
    pub boundary: Vec<BoundaryNode>,
    /// Longest edge in model units.
    pub mesh_size: f64,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Builds the structured polar mesh: one pole node and `rings` rings of `sectors` nodes
/// graded linearly in geodesic radius up to `ρ(θ)`.
pub fn build_star_mesh(domain: &StarDomain, rings: usize, sectors: usize) -> Result<TriMesh> {
    if rings < 2 || sectors < 8 {
        return Err(Error::Domain(format!(
            "need rings >= 2 and sectors >= 8, got rings = {rings}, sectors = {sectors}"
        )));
    }
    domain.validate()?;

    let mut nodes = Vec::with_capacity(1 + rings * sectors);
    let mut is_boundary = vec![false; 1 + rings * sectors];
    nodes.push([0.0, 0.0]);
    let thetas: Vec<f64> = (0..sectors).map(|i| TAU * i as f64 / sectors as f64).collect();
    let rhos: Vec<f64> = thetas.iter().map(|&t| domain.rho(t)).collect();
    for j in 1..=rings {
        let frac = j as f64 / rings as f64;
        for (t, rho) in thetas.iter().zip(&rhos) {
            // the outermost ring uses ρ itself so the boundary invariant is exact
            let r = if j == rings { *rho } else { rho * frac };
            nodes.push(domain.model_point(r, *t));
        }
    }
    let idx = |j: usize, i: usize| 1 + (j - 1) * sectors + i % sectors;

    let mut triangles = Vec::with_capacity(sectors * (2 * rings - 1));
    for i in 0..sectors {
        triangles.push([0, idx(1, i), idx(1, i + 1)]);
    }
    for j in 1..rings {
        for i in 0..sectors {
            let (a, b, c, d) = (idx(j, i), idx(j + 1, i), idx(j + 1, i + 1), idx(j, i + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let boundary = thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let node = idx(rings, i);
            is_boundary[node] = true;
            BoundaryNode { node, theta, normal: domain.boundary_normal(theta) }
        })
        .collect();

    let mut mesh = TriMesh { domain: domain.clone(), nodes, triangles, is_boundary, boundary, mesh_size: 0.0 };
    mesh.mesh_size = mesh.max_edge_length();
    Ok(mesh)
}

/// Standard mesh for refinement level `level` (both ring and sector counts double per level).
pub fn mesh_at_level(domain: &StarDomain, level: u32) -> Result<TriMesh> {
    let scale = 1usize << level;
    build_star_mesh(domain, BASE_RINGS * scale, BASE_SECTORS * scale)
}

/// Regular 4-way subdivision; new boundary midpoints are projected back onto `ρ(θ)`.
pub fn refine(mesh: &TriMesh) -> TriMesh {
    let mut incidence: HashMap<(usize, usize), u8> = HashMap::new();
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            *incidence.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }

    let mut theta_of: HashMap<usize, f64> = mesh.boundary.iter().map(|b| (b.node, b.theta)).collect();
    let mut nodes = mesh.nodes.clone();
    let mut is_boundary = mesh.is_boundary.clone();
    let mut boundary = mesh.boundary.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::with_capacity(incidence.len());
    let domain = &mesh.domain;

    let mut midpoint_of = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoints.get(&key) {
            return m;
        }
        let id = nodes.len();
        let on_boundary = incidence[&key] == 1 && mesh.is_boundary[a] && mesh.is_boundary[b];
        if on_boundary {
            let (ta, tb) = (theta_of[&a], theta_of[&b]);
            let mut d = tb - ta;
            if d > PI {
                d -= TAU;
            } else if d <= -PI {
                d += TAU;
            }
            let theta = wrap_angle(ta + 0.5 * d);
            nodes.push(domain.model_point(domain.rho(theta), theta));
            is_boundary.push(true);
            theta_of.insert(id, theta);
            boundary.push(BoundaryNode { node: id, theta, normal: domain.boundary_normal(theta) });
        } else {
            nodes.push(midpoint(nodes[a], nodes[b]));
            is_boundary.push(false);
        }
        midpoints.insert(key, id);
        id
    };

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint_of(a, b, &mut nodes);
        let bc = midpoint_of(b, c, &mut nodes);
        let ca = midpoint_of(c, a, &mut nodes);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    boundary.sort_by(|x, y| x.theta.total_cmp(&y.theta));

    let mut refined = TriMesh { domain: domain.clone(), nodes, triangles, is_boundary, boundary, mesh_size: 0.0 };
    refined.mesh_size = refined.max_edge_length();
    refined
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    /// Largest circumradius / (2 · inradius); 1 for an equilateral triangle.
    pub max_aspect_ratio: f64,
    pub h_max: f64,
}

impl MeshQuality {
    pub fn is_degenerate(&self) -> bool {
        self.min_angle_deg < MIN_ANGLE_WARNING_DEG
    }
}

pub fn mesh_quality(mesh: &TriMesh) -> MeshQuality {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    for t in &mesh.triangles {
        let p = t.map(|i| mesh.nodes[i]);
        let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
        let area = signed_area(p[0], p[1], p[2]).abs();
        for i in 0..3 {
            let (a, b, c) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
            let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
            min_angle = min_angle.min(cos.acos().to_degrees());
        }
        let perimeter = l.iter().sum::<f64>();
        let circum = l[0] * l[1] * l[2] / (4.0 * area);
        let inradius = 2.0 * area / perimeter;
        max_aspect = max_aspect.max(circum / (2.0 * inradius));
    }
    MeshQuality { min_angle_deg: min_angle, max_aspect_ratio: max_aspect, h_max: mesh.max_edge_length() }
}

impl TriMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn curvature(&self) -> Curvature {
        self.domain.curvature
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|i| self.nodes[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |e| (t[e], t[(e + 1) % 3])))
            .map(|(a, b)| dist(self.nodes[a], self.nodes[b]))
            .fold(0.0, f64::max)
    }

    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |e| (t[e].min(t[(e + 1) % 3]), t[e].max(t[(e + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// Geodesic distance from the pole of node `i`.
    pub fn geodesic_radius_of(&self, i: usize) -> f64 {
        let [x, y] = self.nodes[i];
        geodesic_radius_unchecked(self.curvature(), x.hypot(y))
    }

    /// Euclidean area of the triangulation.
    pub fn model_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Shoelace area of the boundary polygon.
    pub fn polygon_area(&self) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|i| {
                let a = self.nodes[self.boundary[i].node];
                let b = self.nodes[self.boundary[(i + 1) % n].node];
                0.5 * (a[0] * b[1] - b[0] * a[1])
            })
            .sum()
    }

    /// Riemannian area `Σ_T (mean of λ² at edge midpoints) · |T|`.
    pub fn riemannian_area(&self) -> f64 {
        let k = self.curvature();
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                let w = conformal_weight(k, midpoint(a, b))
                    + conformal_weight(k, midpoint(b, c))
                    + conformal_weight(k, midpoint(c, a));
                w / 3.0 * signed_area(a, b, c)
            })
            .sum()
    }

    /// Riemannian length of the boundary segment between consecutive boundary nodes `i` and `i+1`.
    pub fn boundary_segment_length(&self, i: usize) -> f64 {
        let n = self.boundary.len();
        let a = self.nodes[self.boundary[i].node];
        let b = self.nodes[self.boundary[(i + 1) % n].node];
        let m = midpoint(a, b);
        conformal_factor_at(self.curvature(), m[0].hypot(m[1])) * dist(a, b)
    }

    /// Nodes that share a triangle with a boundary node (including the boundary itself).
    pub fn boundary_layer(&self) -> Vec<bool> {
        let mut layer = self.is_boundary.clone();
        for t in &self.triangles {
            if t.iter().any(|&i| self.is_boundary[i]) {
                for &i in t {
                    layer[i] = true;
                }
            }
        }
        layer
    }

    /// Checks the structural invariants: positive orientation, boundary on `ρ`, connectivity.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let area = self.triangle_area(t);
            if !(area > 0.0) {
                return Err(Error::Assembly { triangle: t, area });
            }
        }
        for b in &self.boundary {
            let r = self.geodesic_radius_of(b.node);
            let rho = self.domain.rho(b.theta);
            if (r - rho).abs() > 1e-12 {
                return Err(Error::InvalidDomain(format!(
                    "boundary node {} at geodesic radius {r} but ρ(θ) = {rho}",
                    b.node
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidDomain("triangle adjacency graph is disconnected".into()));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                by_edge.entry((a.min(b), a.max(b))).or_default().push(ti);
            }
        }
        let mut seen = vec![false; self.triangles.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(ti) = queue.pop_front() {
            let t = self.triangles[ti];
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                for &nb in &by_edge[&(a.min(b), a.max(b))] {
                    if !seen[nb] {
                        seen[nb] = true;
                        count += 1;
                        queue.push_back(nb);
                    }
                }
            }
        }
        count == self.triangles.len()
    }

    /// Plain-text export: `N T`, then `x y flag` per node, then `i j k` per triangle.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.nodes.len(), self.triangles.len())?;
        for (p, &b) in self.nodes.iter().zip(&self.is_boundary) {
            writeln!(out, "{} {} {}", p[0], p[1], u8::from(b))?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
