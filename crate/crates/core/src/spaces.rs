use std::sync::Arc;

use nalgebra::{DMatrix, Matrix6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::polybasis::ShapeSet;
use crate::quadrature::gauss_legendre;
use crate::sparse::CsrMatrix;

pub const P3_LOCAL: usize = 10;

/// Elementwise P3 space without any interelement continuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrokenSpace {
    pub n_triangles: usize,
    pub components: usize,
}

impl BrokenSpace {
    pub fn new(mesh: &TriMesh, components: usize) -> Self {
        BrokenSpace { n_triangles: mesh.n_triangles(), components }
    }

    pub fn dim(&self) -> usize {
        P3_LOCAL * self.n_triangles * self.components
    }

    pub fn dof(&self, comp: usize, t: usize, i: usize) -> usize {
        comp * P3_LOCAL * self.n_triangles + P3_LOCAL * t + i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    VertexContinuity,
    EdgeJumpMean,
    EdgeNormalMoment0,
    EdgeNormalMoment1,
    BoundaryVertexZero,
    BoundaryEdgeMean,
    BoundaryNormalMoment,
}

/// Scalar constraint rows over broken P3 coefficients.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub mesh: Arc<TriMesh>,
    pub matrix: CsrMatrix,
    pub kinds: Vec<ConstraintKind>,
}

/// Edge functionals of the ten P3 basis functions of triangle `t` on its edge `e`:
/// the mean against the first orthonormal Legendre polynomial, and the normal-derivative
/// moments against the first two. The normal is the global normal of `e`.
pub fn edge_functionals(mesh: &TriMesh, e: usize, t: usize) -> [[f64; P3_LOCAL]; 3] {
    let (s, w) = gauss_legendre(2);
    let len = mesh.edge_length(e);
    let n = mesh.edge_normal(e);
    let map = mesh.map(t);
    let set = ShapeSet::p3();
    let mut out = [[0.0; P3_LOCAL]; 3];
    for (&sg, &wg) in s.iter().zip(&w) {
        let x = mesh.edge_point(e, sg);
        let mut xi = map.to_reference(x);
        xi = xi.map(|c| if c.abs() < 1e-15 { 0.0 } else { c });
        let table = set.eval(xi);
        let scale = wg * len.sqrt();
        let p1 = 3f64.sqrt() * (2.0 * sg - 1.0);
        for i in 0..P3_LOCAL {
            let g = map.push_gradient(table.gradients[i]);
            let dn = g[0] * n[0] + g[1] * n[1];
            out[0][i] += scale * table.values[i];
            out[1][i] += scale * dn;
            out[2][i] += scale * p1 * dn;
        }
    }
    out
}

pub fn build_b3_constraints(mesh: Arc<TriMesh>) -> Result<ConstraintSystem> {
    let broken = BrokenSpace::new(&mesh, 1);
    let mut triplets = Vec::new();
    let mut kinds = Vec::new();
    let mut row = 0usize;

    for v in 0..mesh.n_vertices() {
        let star = &mesh.vertex_to_triangles[v];
        let loc = |t: usize| mesh.local_vertex(t, v).expect("vertex belongs to its star");
        if mesh.boundary_vertex[v] {
            for &t in star {
                triplets.push((row, broken.dof(0, t, loc(t)), 1.0));
                kinds.push(ConstraintKind::BoundaryVertexZero);
                row += 1;
            }
        } else {
            let t0 = star[0];
            for &t in &star[1..] {
                triplets.push((row, broken.dof(0, t0, loc(t0)), 1.0));
                triplets.push((row, broken.dof(0, t, loc(t)), -1.0));
                kinds.push(ConstraintKind::VertexContinuity);
                row += 1;
            }
        }
    }

    for e in 0..mesh.n_edges() {
        if mesh.edge_length(e) <= 0.0 {
            return Err(Error::DegenerateMesh(format!("edge {e} has zero length")));
        }
        let (t1, t2) = mesh.edge_to_triangles[e];
        let f1 = edge_functionals(&mesh, e, t1);
        let f2 = t2.map(|t| edge_functionals(&mesh, e, t));
        let row_kinds = match t2 {
            Some(_) => [
                ConstraintKind::EdgeJumpMean,
                ConstraintKind::EdgeNormalMoment0,
                ConstraintKind::EdgeNormalMoment1,
            ],
            None => [
                ConstraintKind::BoundaryEdgeMean,
                ConstraintKind::BoundaryNormalMoment,
                ConstraintKind::BoundaryNormalMoment,
            ],
        };
        for (r, kind) in row_kinds.into_iter().enumerate() {
            for i in 0..P3_LOCAL {
                triplets.push((row, broken.dof(0, t1, i), f1[r][i]));
            }
            if let (Some(t), Some(f)) = (t2, &f2) {
                for i in 0..P3_LOCAL {
                    triplets.push((row, broken.dof(0, t, i), -f[r][i]));
                }
            }
            kinds.push(kind);
            row += 1;
        }
    }

    let matrix = CsrMatrix::from_triplets(row, broken.dim(), &triplets);
    Ok(ConstraintSystem { mesh, matrix, kinds })
}

/// Null space of a small dense matrix by Gauss-Jordan elimination with complete pivoting.
///
/// Pivots below `rel_tol` times the largest pivot end the elimination. The returned columns
/// are orthonormal.
pub fn dense_nullspace(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    let mut first_pivot = 0.0f64;
    while rank < m.min(n) {
        let (mut pi, mut pj, mut best) = (rank, rank, 0.0f64);
        for j in rank..n {
            for i in rank..m {
                let v = w[(i, j)].abs();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if rank == 0 {
            first_pivot = best;
        }
        if best == 0.0 || best <= rel_tol * first_pivot {
            break;
        }
        w.swap_rows(rank, pi);
        w.swap_columns(rank, pj);
        perm.swap(rank, pj);
        let p = w[(rank, rank)];
        for j in 0..n {
            w[(rank, j)] /= p;
        }
        for i in 0..m {
            if i != rank {
                let f = w[(i, rank)];
                if f != 0.0 {
                    for j in 0..n {
                        w[(i, j)] -= f * w[(rank, j)];
                    }
                }
            }
        }
        rank += 1;
    }
    let nullity = n - rank;
    let mut z = DMatrix::zeros(n, nullity);
    for k in 0..nullity {
        let free = rank + k;
        z[(perm[free], k)] = 1.0;
        for r in 0..rank {
            z[(perm[r], k)] = -w[(r, free)];
        }
    }
    orthonormalize(&mut z);
    z
}

/// Modified Gram-Schmidt applied twice.
fn orthonormalize(z: &mut DMatrix<f64>) {
    for k in 0..z.ncols() {
        for _ in 0..2 {
            for j in 0..k {
                let d = z.column(j).dot(&z.column(k));
                let cj = z.column(j).into_owned();
                z.column_mut(k).axpy(-d, &cj, 1.0);
            }
        }
        let nrm = z.column(k).norm();
        z.column_mut(k).scale_mut(1.0 / nrm);
    }
}

/// Flips each column so that its largest-magnitude entry (first on ties) is positive.
fn fix_signs(z: &mut DMatrix<f64>) {
    for k in 0..z.ncols() {
        let mut best = 0;
        for i in 0..z.nrows() {
            if z[(i, k)].abs() > z[(best, k)].abs() * (1.0 + 1e-12) {
                best = i;
            }
        }
        if z[(best, k)] < 0.0 {
            z.column_mut(k).neg_mut();
        }
    }
}

/// Sparse basis of the constrained space in broken coordinates.
#[derive(Debug, Clone)]
pub struct ConformingBasis {
    /// Broken dimension by conforming dimension.
    pub transform: CsrMatrix,
    pub dim: usize,
    pub n_vertex_functions: usize,
    pub n_edge_functions: usize,
    /// Largest entry of C N found at construction.
    pub constraint_residual: f64,
}

pub const NULLSPACE_DROP_TOL: f64 = 1e-9;
const ENTRY_DROP: f64 = 1e-14;

/// Builds the B3 basis from patch-local null spaces.
///
/// Every interior edge contributes the one function supported on its two triangles. Every
/// interior vertex contributes the three functions supported on its star whose mean normal
/// derivative vanishes on all spokes.
pub fn build_nullspace(cs: &ConstraintSystem) -> Result<ConformingBasis> {
    let mesh = &cs.mesh;
    let c = &cs.matrix;
    let ct = c.transpose();

    struct Patch {
        triangles: Vec<usize>,
        spokes: Vec<usize>,
        expect: usize,
        label: String,
    }
    let mut patches = Vec::new();
    for v in mesh.interior_vertices() {
        let mut triangles = mesh.vertex_to_triangles[v].clone();
        triangles.sort_unstable();
        let spokes = mesh.vertex_edges(v).into_iter().filter(|&e| !mesh.boundary_edge[e]).collect();
        patches.push(Patch { triangles, spokes, expect: 3, label: format!("vertex {v}") });
    }
    let n_vertex_patches = patches.len();
    for e in mesh.interior_edges() {
        let (t1, t2) = mesh.edge_to_triangles[e];
        let t2 = t2.expect("interior edge has two triangles");
        patches.push(Patch {
            triangles: vec![t1.min(t2), t1.max(t2)],
            spokes: Vec::new(),
            expect: 1,
            label: format!("edge {e}"),
        });
    }

    let locals: Vec<Result<(Vec<usize>, DMatrix<f64>)>> = patches
        .par_iter()
        .map(|p| {
            let cols: Vec<usize> =
                p.triangles.iter().flat_map(|&t| (0..P3_LOCAL).map(move |i| P3_LOCAL * t + i)).collect();
            let mut col_pos = std::collections::HashMap::with_capacity(cols.len());
            for (k, &g) in cols.iter().enumerate() {
                col_pos.insert(g, k);
            }
            let mut rows: Vec<usize> = cols.iter().flat_map(|&g| ct.row(g).map(|(r, _)| r)).collect();
            rows.sort_unstable();
            rows.dedup();
            let mut a = DMatrix::zeros(rows.len() + p.spokes.len(), cols.len());
            for (li, &r) in rows.iter().enumerate() {
                for (g, v) in c.row(r) {
                    if let Some(&k) = col_pos.get(&g) {
                        a[(li, k)] = v;
                    }
                }
            }
            for (s, &e) in p.spokes.iter().enumerate() {
                let t = mesh.edge_to_triangles[e].0;
                let f = edge_functionals(mesh, e, t);
                let base = col_pos[&(P3_LOCAL * t)];
                for i in 0..P3_LOCAL {
                    a[(rows.len() + s, base + i)] = f[1][i];
                }
            }
            let mut z = dense_nullspace(&a, NULLSPACE_DROP_TOL);
            if z.ncols() != p.expect {
                return Err(Error::Nullspace(format!(
                    "{} patch has local null space of dimension {}, expected {}",
                    p.label,
                    z.ncols(),
                    p.expect
                )));
            }
            fix_signs(&mut z);
            Ok((cols, z))
        })
        .collect();

    let mut triplets = Vec::new();
    let mut col = 0usize;
    for local in locals {
        let (cols, z) = local?;
        for k in 0..z.ncols() {
            for (i, &g) in cols.iter().enumerate() {
                let v = z[(i, k)];
                if v.abs() > ENTRY_DROP {
                    triplets.push((g, col, v));
                }
            }
            col += 1;
        }
    }
    let n_vertex_functions = 3 * n_vertex_patches;
    let transform = CsrMatrix::from_triplets(c.ncols(), col, &triplets);

    let constraint_residual = c.matmul(&transform).max_abs();
    if constraint_residual > 1e-10 {
        return Err(Error::Nullspace(format!("constraint residual {constraint_residual:e} exceeds 1e-10")));
    }
    let smallest = crate::eigen::smallest_gram_eigenvalue(&transform)?;
    if smallest <= 1e-8 {
        return Err(Error::Nullspace(format!("basis is numerically dependent (Gram eigenvalue {smallest:e})")));
    }

    Ok(ConformingBasis {
        dim: col,
        n_vertex_functions,
        n_edge_functions: col - n_vertex_functions,
        transform,
        constraint_residual,
    })
}

/// Morley element tables: six P2 shape functions per triangle, dual to vertex values and
/// edge means of the normal derivative along the global edge normal.
#[derive(Debug, Clone)]
pub struct MorleySpace {
    pub mesh: Arc<TriMesh>,
    pub components: usize,
    pub scalar_dim: usize,
    /// Shape function `m` is the sum over `j` of `coeffs[t][(j, m)]` times P2 Lagrange `j`.
    pub coeffs: Vec<Matrix6<f64>>,
    /// Scalar global DOF of each local function, `None` when fixed by the boundary condition.
    pub dofs: Vec<[Option<usize>; 6]>,
}

impl MorleySpace {
    /// Local functional matrix F with F[i][j] = functional i applied to P2 Lagrange j.
    pub fn functionals(mesh: &TriMesh, t: usize) -> Matrix6<f64> {
        let set = ShapeSet::p2();
        let map = mesh.map(t);
        let (s, w) = gauss_legendre(2);
        let mut f = Matrix6::zeros();
        for i in 0..3 {
            f[(i, i)] = 1.0;
        }
        for k in 0..3 {
            let e = mesh.triangle_edges[t][k];
            let n = mesh.edge_normal(e);
            for (&sg, &wg) in s.iter().zip(&w) {
                let xi = map.to_reference(mesh.edge_point(e, sg));
                let table = set.eval(xi);
                for j in 0..6 {
                    let g = map.push_gradient(table.gradients[j]);
                    f[(3 + k, j)] += wg * (g[0] * n[0] + g[1] * n[1]);
                }
            }
        }
        f
    }

    pub fn new(mesh: Arc<TriMesh>, components: usize) -> Self {
        let mut vertex_dof = vec![None; mesh.n_vertices()];
        let mut next = 0;
        for v in mesh.interior_vertices() {
            vertex_dof[v] = Some(next);
            next += 1;
        }
        let mut edge_dof = vec![None; mesh.n_edges()];
        for e in mesh.interior_edges() {
            edge_dof[e] = Some(next);
            next += 1;
        }
        let mut coeffs = Vec::with_capacity(mesh.n_triangles());
        let mut dofs = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let f = Self::functionals(&mesh, t);
            coeffs.push(f.try_inverse().expect("Morley functionals are unisolvent"));
            let tri = mesh.triangles[t];
            let te = mesh.triangle_edges[t];
            dofs.push([
                vertex_dof[tri[0]],
                vertex_dof[tri[1]],
                vertex_dof[tri[2]],
                edge_dof[te[0]],
                edge_dof[te[1]],
                edge_dof[te[2]],
            ]);
        }
        MorleySpace { mesh, components, scalar_dim: next, coeffs, dofs }
    }

    /// Scalar embedding into broken P3 coefficients.
    pub fn scalar_transform(&self) -> CsrMatrix {
        let p2 = ShapeSet::p2();
        let p3 = ShapeSet::p3();
        let lagrange_at_nodes: Vec<Vec<f64>> = p3.nodes.iter().map(|&x| p2.eval(x).values).collect();
        let mut triplets = Vec::new();
        for t in 0..self.mesh.n_triangles() {
            let c = &self.coeffs[t];
            for (m, dof) in self.dofs[t].iter().enumerate() {
                let Some(dof) = *dof else { continue };
                for (node, l) in lagrange_at_nodes.iter().enumerate() {
                    let v: f64 = (0..6).map(|j| c[(j, m)] * l[j]).sum();
                    if v != 0.0 {
                        triplets.push((P3_LOCAL * t + node, dof, v));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(P3_LOCAL * self.mesh.n_triangles(), self.scalar_dim, &triplets)
    }
}

pub fn build_morley(mesh: Arc<TriMesh>, components: usize) -> MorleySpace {
    MorleySpace::new(mesh, components)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    B3,
    Morley,
}

impl std::fmt::Display for ElementKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ElementKind::B3 => "b3",
            ElementKind::Morley => "morley",
        })
    }
}

impl std::str::FromStr for ElementKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b3" => Ok(ElementKind::B3),
            "morley" => Ok(ElementKind::Morley),
            _ => Err(Error::InvalidSpec(format!("unknown element `{s}`"))),
        }
    }
}

/// A discrete space represented through its embedding into broken P3.
#[derive(Debug, Clone)]
pub struct FemSpace {
    pub element: ElementKind,
    pub mesh: Arc<TriMesh>,
    pub components: usize,
    pub scalar_dim: usize,
    /// Broken dimension by space dimension, block diagonal over components.
    pub transform: CsrMatrix,
}

impl FemSpace {
    pub fn new(element: ElementKind, mesh: Arc<TriMesh>, components: usize) -> Result<Self> {
        let scalar = match element {
            ElementKind::B3 => build_nullspace(&build_b3_constraints(mesh.clone())?)?.transform,
            ElementKind::Morley => build_morley(mesh.clone(), components).scalar_transform(),
        };
        Ok(FemSpace {
            element,
            scalar_dim: scalar.ncols(),
            transform: scalar.block_diag(components),
            mesh,
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.transform.ncols()
    }

    pub fn broken(&self) -> BrokenSpace {
        BrokenSpace::new(&self.mesh, self.components)
    }

    pub fn reduce(&self, a: &CsrMatrix) -> CsrMatrix {
        a.congruence(&self.transform)
    }

    pub fn reduce_vector(&self, b: &[f64]) -> Vec<f64> {
        self.transform.tr_mul_vec(b)
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.transform.mul_vec(x)
    }
}

/// Dimension of the vector B3 space: three functions per interior vertex, one per interior edge.
pub fn b3_vector_dimension(mesh: &TriMesh) -> usize {
    2 * (3 * mesh.n_interior_vertices() + mesh.n_interior_edges())
}

/// Count of vertex and edge basis functions including those on the boundary.
pub fn b3_vector_count_with_boundary(mesh: &TriMesh) -> usize {
    2 * (3 * mesh.n_vertices() + mesh.n_edges())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_domain, Domain};

    #[test]
    fn single_triangle_rows() {
        let m = TriMesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 1.0).unwrap();
        let cs = build_b3_constraints(Arc::new(m)).unwrap();
        assert_eq!(cs.matrix.nrows(), 12);
        assert_eq!(cs.matrix.ncols(), 10);
    }

    #[test]
    fn continuity_row_count() {
        let m = Arc::new(generate_domain(Domain::UnitSquare, 0).unwrap());
        let cs = build_b3_constraints(m.clone()).unwrap();
        let expect: usize = m.interior_vertices().map(|v| m.vertex_to_triangles[v].len() - 1).sum();
        let got = cs.kinds.iter().filter(|k| **k == ConstraintKind::VertexContinuity).count();
        assert_eq!(got, expect);
        for (r, kind) in cs.kinds.iter().enumerate() {
            if *kind == ConstraintKind::EdgeJumpMean {
                let tris: std::collections::BTreeSet<usize> = cs.matrix.row(r).map(|(j, _)| j / 10).collect();
                assert!(tris.len() <= 2);
                assert!(cs.matrix.row(r).count() <= 20);
            }
        }
    }

    #[test]
    fn nullspace_is_complete_on_small_meshes() {
        for d in [Domain::UnitSquare, Domain::LShape, Domain::EquilateralTriangle, Domain::RightTriangle] {
            for level in 0..2 {
                let m = Arc::new(generate_domain(d, level).unwrap());
                let cs = build_b3_constraints(m.clone()).unwrap();
                let nb = build_nullspace(&cs).unwrap();
                assert_eq!(nb.dim, 3 * m.n_interior_vertices() + m.n_interior_edges());
                let dense = cs.matrix.to_dense();
                let svd = dense.clone().svd(false, false);
                let smax = svd.singular_values.max();
                let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
                assert_eq!(dense.ncols() - rank, nb.dim, "{d} level {level}");
                assert!(nb.constraint_residual < 1e-12);
            }
        }
    }

    #[test]
    fn nullspace_is_deterministic() {
        let m = Arc::new(generate_domain(Domain::LShape, 1).unwrap());
        let a = build_nullspace(&build_b3_constraints(m.clone()).unwrap()).unwrap();
        let b = build_nullspace(&build_b3_constraints(m).unwrap()).unwrap();
        assert_eq!(a.transform, b.transform);
    }

    #[test]
    fn dense_nullspace_small() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let z = dense_nullspace(&a, 1e-9);
        assert_eq!(z.ncols(), 1);
        assert!((&a * &z).norm() < 1e-15);
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn morley_counts_and_duality() {
        let m = Arc::new(generate_domain(Domain::UnitSquare, 0).unwrap());
        let ms = build_morley(m.clone(), 1);
        assert_eq!(ms.scalar_dim, 9);
        for t in 0..m.n_triangles() {
            let f = MorleySpace::functionals(&m, t);
            let prod = f * ms.coeffs[t];
            assert!((prod - Matrix6::identity()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn morley_reproduces_quadratics() {
        let m = Arc::new(generate_domain(Domain::EquilateralTriangle, 1).unwrap());
        let ms = build_morley(m.clone(), 1);
        let set = ShapeSet::p2();
        let q = |p: [f64; 2]| 0.3 + 1.2 * p[0] - 0.7 * p[1] + 0.9 * p[0] * p[0] - 1.1 * p[0] * p[1] + 0.4 * p[1] * p[1];
        let dq = |p: [f64; 2]| [1.2 + 1.8 * p[0] - 1.1 * p[1], -0.7 - 1.1 * p[0] + 0.8 * p[1]];
        for t in 0..m.n_triangles() {
            let map = m.map(t);
            let mut dofs = [0.0; 6];
            for i in 0..3 {
                dofs[i] = q(m.vertices[m.triangles[t][i]]);
            }
            for k in 0..3 {
                let e = m.triangle_edges[t][k];
                let n = m.edge_normal(e);
                let (s, w) = gauss_legendre(3);
                dofs[3 + k] = s
                    .iter()
                    .zip(&w)
                    .map(|(&s, &w)| {
                        let g = dq(m.edge_point(e, s));
                        w * (g[0] * n[0] + g[1] * n[1])
                    })
                    .sum();
            }
            for xi in [[0.2, 0.3], [0.6, 0.1]] {
                let l = set.eval(xi).values;
                let val: f64 = (0..6)
                    .map(|mm| dofs[mm] * (0..6).map(|j| ms.coeffs[t][(j, mm)] * l[j]).sum::<f64>())
                    .sum();
                assert!((val - q(map.to_physical(xi))).abs() < 1e-12);
            }
        }
    }
}
