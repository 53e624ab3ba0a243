//! P1 finite elements for `Δ_g v + nKv = −1`, `v = 0` on the boundary (n = 2).
//!
//! In a conformal chart `g = λ²|dx|²` the Laplace–Beltrami operator is
//! `λ⁻²Δ`, so the problem becomes `−Δv − nKλ²v = λ²` in model coordinates
//! with weak form `∫∇v·∇w − nK∫λ²vw = ∫λ²w`.

use crate::error::{Error, Result};
use crate::geometry::{conformal_factor_at, conformal_weight, Curvature};
use crate::mesh::TriMesh;
use crate::sparse::{conjugate_gradient, CsrMatrix};

/// Only the two-dimensional charts are discretised.
pub const MESH_DIMENSION: usize = 2;

/// Default relative residual for CG.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Degree of freedom of each mesh node, `None` on the boundary.
    pub dof_of_node: Vec<Option<usize>>,
    pub node_of_dof: Vec<usize>,
}

/// Nodal values on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(nodes: usize) -> Self {
        Self { values: vec![0.0; nodes] }
    }

    pub fn from_fn(mesh: &TriMesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self { values: mesh.nodes.iter().map(|&x| f(x)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_mesh(&self, mesh: &TriMesh) {
        assert_eq!(self.values.len(), mesh.num_nodes(), "field does not belong to this mesh");
    }
}

/// Gradients of the three P1 hat functions on a triangle, and its area.
fn shape_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let g = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        [(p[j][1] - p[k][1]) / (2.0 * area), (p[k][0] - p[j][0]) / (2.0 * area)]
    });
    (g, area)
}

/// Edge midpoints `m01, m12, m20`.
fn midpoints(p: [[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    [mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0])]
}

/// Hat-function values at the edge midpoints, indexed `[midpoint][vertex]`.
const MIDPOINT_HATS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Assembles stiffness minus `nK` times the `λ²`-weighted mass matrix over interior nodes.
pub fn assemble(mesh: &TriMesh, n: usize) -> Result<SparseSystem> {
    if n != MESH_DIMENSION {
        return Err(Error::Domain(format!("mesh solver supports n = 2 only, got n = {n}")));
    }
    let k = mesh.curvature();
    let nk = n as f64 * k.value();

    let mut dof_of_node = vec![None; mesh.num_nodes()];
    let mut node_of_dof = Vec::new();
    for (i, &b) in mesh.is_boundary.iter().enumerate() {
        if !b {
            dof_of_node[i] = Some(node_of_dof.len());
            node_of_dof.push(i);
        }
    }

    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    let mut rhs = vec![0.0; node_of_dof.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(t);
        let (grad, area) = shape_gradients(p);
        if !(area > 0.0) {
            return Err(Error::Assembly { triangle: t, area });
        }
        let weights = midpoints(p).map(|m| conformal_weight(k, m));
        for a in 0..3 {
            let Some(row) = dof_of_node[tri[a]] else { continue };
            let mut load = 0.0;
            for q in 0..3 {
                load += weights[q] * MIDPOINT_HATS[q][a];
            }
            rhs[row] += area / 3.0 * load;
            for b in 0..3 {
                let Some(col) = dof_of_node[tri[b]] else { continue };
                let stiffness = area * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
                let mut mass = 0.0;
                for q in 0..3 {
                    mass += weights[q] * MIDPOINT_HATS[q][a] * MIDPOINT_HATS[q][b];
                }
                triplets.push((row, col, stiffness - nk * area / 3.0 * mass));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(node_of_dof.len(), triplets);
    Ok(SparseSystem { matrix, rhs, dof_of_node, node_of_dof })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub field: Field,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG; boundary nodes get the Dirichlet value 0.
pub fn solve(system: &SparseSystem, tol: f64, max_iter: usize) -> Result<Solved> {
    let out = conjugate_gradient(&system.matrix, &system.rhs, tol, max_iter)?;
    let mut values = vec![0.0; system.dof_of_node.len()];
    for (dof, &node) in system.node_of_dof.iter().enumerate() {
        values[node] = out.solution[dof];
    }
    Ok(Solved { field: Field { values }, iterations: out.iterations, relative_residual: out.relative_residual })
}

/// Iteration cap used by [`solve_on_mesh`].
pub fn default_max_iter(system: &SparseSystem) -> usize {
    (10 * system.node_of_dof.len()).max(100)
}

/// Per-triangle constant gradients of a P1 field, in model coordinates.
pub fn triangle_gradients(field: &Field, mesh: &TriMesh) -> Vec<[f64; 2]> {
    field.check_mesh(mesh);
    mesh.triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let (grad, _) = shape_gradients(mesh.triangle_points(t));
            let mut g = [0.0; 2];
            for a in 0..3 {
                g[0] += field.values[tri[a]] * grad[a][0];
                g[1] += field.values[tri[a]] * grad[a][1];
            }
            g
        })
        .collect()
}

/// Area-weighted average of the incident triangle gradients at every node.
pub fn recover_gradient(field: &Field, mesh: &TriMesh) -> Vec<[f64; 2]> {
    let per_triangle = triangle_gradients(field, mesh);
    let mut sum = vec![[0.0; 2]; mesh.num_nodes()];
    let mut weight = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(t);
        for &i in tri {
            sum[i][0] += area * per_triangle[t][0];
            sum[i][1] += area * per_triangle[t][1];
            weight[i] += area;
        }
    }
    sum.iter().zip(&weight).map(|(g, w)| [g[0] / w, g[1] / w]).collect()
}

/// Riemannian gradient norm `λ⁻¹|∇v|` of a model-coordinate gradient at `x`.
pub fn riemannian_norm(k: Curvature, x: [f64; 2], grad: [f64; 2]) -> f64 {
    grad[0].hypot(grad[1]) / conformal_factor_at(k, x[0].hypot(x[1]))
}

/// `|∇_g v|` at every boundary node, in the mesh's boundary order.
pub fn boundary_gradient_trace(gradients: &[[f64; 2]], mesh: &TriMesh) -> Vec<f64> {
    let k = mesh.curvature();
    mesh.boundary.iter().map(|b| riemannian_norm(k, mesh.nodes[b.node], gradients[b.node])).collect()
}

/// Assembles and solves on `mesh` with the default iteration cap.
pub fn solve_on_mesh(mesh: &TriMesh, tol: f64) -> Result<Solved> {
    let system = assemble(mesh, MESH_DIMENSION)?;
    solve(&system, tol, default_max_iter(&system))
}
