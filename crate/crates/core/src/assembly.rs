use rayon::prelude::*;
use serde::Serialize;

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::polybasis::{divsigma, Lame, PointTable, ShapeSet};
use crate::quadrature::{triangle_quadrature, QuadratureRule};
use crate::spaces::{BrokenSpace, P3_LOCAL};
use crate::sparse::CsrMatrix;

/// Quadrature exactness for stiffness-type forms.
pub const STIFFNESS_DEGREE: usize = 6;
/// Quadrature exactness for mass forms, which pair two cubics.
pub const MASS_DEGREE: usize = 8;
/// Quadrature exactness for load vectors and error norms.
pub const DATA_DEGREE: usize = 10;

/// Bilinear form `a(u, v)`; rows of the assembled matrix belong to the test function `v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FormKind {
    /// (w u, v)
    Mass(Coefficient),
    /// (beta div sigma u, div sigma v)
    BiElastic(Coefficient),
    /// (sigma(u), grad v)
    ElasticEnergy,
    /// c (hess u, hess v), mixed derivative counted twice
    HessianFull(Coefficient),
    /// c (grad div u, grad div v)
    GradDiv(Coefficient),
    /// c (lap u, lap v)
    LaplacePair(Coefficient),
    /// c (curl rot u, curl rot v)
    CurlRot(Coefficient),
    /// (c u, div sigma v)
    MixedDivSigmaMass(Coefficient),
    /// c (grad div u, curl rot v)
    GradDivCurlRot(Coefficient),
}

impl FormKind {
    pub fn name(&self) -> &'static str {
        match self {
            FormKind::Mass(_) => "mass",
            FormKind::BiElastic(_) => "bi-elastic",
            FormKind::ElasticEnergy => "elastic-energy",
            FormKind::HessianFull(_) => "hessian-full",
            FormKind::GradDiv(_) => "grad-div",
            FormKind::LaplacePair(_) => "laplace-pair",
            FormKind::CurlRot(_) => "curl-rot",
            FormKind::MixedDivSigmaMass(_) => "mixed-div-sigma-mass",
            FormKind::GradDivCurlRot(_) => "grad-div-curl-rot",
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, FormKind::MixedDivSigmaMass(_) | FormKind::GradDivCurlRot(_))
    }

    fn coefficient(&self) -> Option<&Coefficient> {
        match self {
            FormKind::ElasticEnergy => None,
            FormKind::Mass(c)
            | FormKind::BiElastic(c)
            | FormKind::HessianFull(c)
            | FormKind::GradDiv(c)
            | FormKind::LaplacePair(c)
            | FormKind::CurlRot(c)
            | FormKind::MixedDivSigmaMass(c)
            | FormKind::GradDivCurlRot(c) => Some(c),
        }
    }

    fn requires_positive(&self) -> bool {
        matches!(self, FormKind::Mass(_) | FormKind::BiElastic(_))
    }

    fn componentwise(&self) -> bool {
        matches!(self, FormKind::Mass(_) | FormKind::HessianFull(_) | FormKind::LaplacePair(_))
    }

    pub fn default_degree(&self) -> usize {
        match self {
            FormKind::Mass(_) => MASS_DEGREE,
            _ => STIFFNESS_DEGREE,
        }
    }

    /// Feature vectors of the trial and test sides for local function `s` of component `c`.
    fn features(&self, lame: Lame, table: &PointTable, comps: usize, c: usize, s: usize, trial: &mut Vec<f64>, test: &mut Vec<f64>) {
        trial.clear();
        test.clear();
        let v = table.values[s];
        let g = table.gradients[s];
        let h = table.hessians[s];
        let zero3 = [0.0; 3];
        let (h1, h2) = if c == 0 { (h, zero3) } else { (zero3, h) };
        let grad_div = [h1[0] + h2[1], h1[1] + h2[2]];
        let curl_rot = [h2[1] - h1[2], h1[1] - h2[0]];
        match self {
            FormKind::Mass(_) => {
                trial.extend((0..comps).map(|k| if k == c { v } else { 0.0 }));
                test.extend_from_slice(trial);
            }
            FormKind::BiElastic(_) => {
                trial.extend(divsigma(lame, h1, h2));
                test.extend_from_slice(trial);
            }
            FormKind::ElasticEnergy => {
                let mut grad = [[0.0; 2]; 2];
                grad[c] = g;
                let div = grad[0][0] + grad[1][1];
                let eps = |a: usize, b: usize| 0.5 * (grad[a][b] + grad[b][a]);
                for a in 0..2 {
                    for b in 0..2 {
                        let kron = if a == b { 1.0 } else { 0.0 };
                        trial.push(2.0 * lame.mu * eps(a, b) + lame.lambda * div * kron);
                        test.push(grad[a][b]);
                    }
                }
            }
            FormKind::HessianFull(_) => {
                let r2 = std::f64::consts::SQRT_2;
                for k in 0..comps {
                    if k == c {
                        trial.extend([h[0], r2 * h[1], h[2]]);
                    } else {
                        trial.extend([0.0; 3]);
                    }
                }
                test.extend_from_slice(trial);
            }
            FormKind::GradDiv(_) => {
                trial.extend(grad_div);
                test.extend_from_slice(trial);
            }
            FormKind::LaplacePair(_) => {
                trial.extend((0..comps).map(|k| if k == c { h[0] + h[2] } else { 0.0 }));
                test.extend_from_slice(trial);
            }
            FormKind::CurlRot(_) => {
                trial.extend(curl_rot);
                test.extend_from_slice(trial);
            }
            FormKind::MixedDivSigmaMass(_) => {
                let mut val = [0.0; 2];
                val[c] = v;
                trial.extend(val);
                test.extend(divsigma(lame, h1, h2));
            }
            FormKind::GradDivCurlRot(_) => {
                trial.extend(grad_div);
                test.extend(curl_rot);
            }
        }
    }
}

/// Assembled matrix over broken P3 coefficients.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    pub matrix: CsrMatrix,
    pub symmetric: bool,
    pub kind: FormKind,
}

fn reference_tables(rule: &QuadratureRule) -> Vec<PointTable> {
    let set = ShapeSet::p3();
    rule.points.iter().map(|&p| set.eval(p)).collect()
}

pub fn assemble(mesh: &TriMesh, components: usize, kind: &FormKind, lame: Lame) -> Result<FormMatrix> {
    assemble_with_degree(mesh, components, kind, lame, kind.default_degree())
}

pub fn assemble_with_degree(
    mesh: &TriMesh,
    components: usize,
    kind: &FormKind,
    lame: Lame,
    degree: usize,
) -> Result<FormMatrix> {
    if !lame.is_valid() {
        return Err(Error::InvalidSpec(format!("Lamé constants must be positive, got {lame:?}")));
    }
    if components != 2 && !(components == 1 && kind.componentwise()) {
        return Err(Error::InvalidSpec(format!("{} needs a two-component space", kind.name())));
    }
    let rule = triangle_quadrature(degree)?;
    let reference = reference_tables(&rule);
    let broken = BrokenSpace::new(mesh, components);
    let nloc = P3_LOCAL * components;

    let blocks: Vec<Result<Vec<f64>>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let map = mesh.map(t);
            let jac = map.det.abs();
            let mut local = vec![0.0; nloc * nloc];
            let mut trial = vec![Vec::new(); nloc];
            let mut test = vec![Vec::new(); nloc];
            for (q, table) in reference.iter().enumerate() {
                let x = map.to_physical(rule.points[q]);
                let coef = kind.coefficient().map_or(1.0, |c| c.eval(x));
                if kind.requires_positive() && !(coef > 0.0) {
                    return Err(Error::NonPositiveCoefficient {
                        name: kind.name().to_string(),
                        value: coef,
                        x: x[0],
                        y: x[1],
                    });
                }
                let phys = table.push_forward(&map);
                for c in 0..components {
                    for s in 0..P3_LOCAL {
                        let k = c * P3_LOCAL + s;
                        let (tr, te) = (&mut trial[k], &mut test[k]);
                        kind.features(lame, &phys, components, c, s, tr, te);
                    }
                }
                let w = rule.weights[q] * jac * coef;
                for i in 0..nloc {
                    for j in 0..nloc {
                        let d: f64 = test[i].iter().zip(&trial[j]).map(|(a, b)| a * b).sum();
                        local[i * nloc + j] += w * d;
                    }
                }
            }
            Ok(local)
        })
        .collect();

    let mut triplets = Vec::with_capacity(mesh.n_triangles() * nloc * nloc);
    for (t, block) in blocks.into_iter().enumerate() {
        let block = block?;
        let global = |k: usize| broken.dof(k / P3_LOCAL, t, k % P3_LOCAL);
        for i in 0..nloc {
            for j in 0..nloc {
                let v = block[i * nloc + j];
                if v != 0.0 {
                    triplets.push((global(i), global(j), v));
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(broken.dim(), broken.dim(), &triplets);
    Ok(FormMatrix { matrix, symmetric: kind.is_symmetric(), kind: kind.clone() })
}

/// Load vector (f, v) over broken P3 coefficients of a two-component space.
pub fn assemble_rhs<F>(mesh: &TriMesh, f: F) -> Result<Vec<f64>>
where
    F: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    let rule = triangle_quadrature(DATA_DEGREE)?;
    let reference = reference_tables(&rule);
    let broken = BrokenSpace::new(mesh, 2);
    let blocks: Vec<[f64; 2 * P3_LOCAL]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let map = mesh.map(t);
            let jac = map.det.abs();
            let mut local = [0.0; 2 * P3_LOCAL];
            for (q, table) in reference.iter().enumerate() {
                let fx = f(map.to_physical(rule.points[q]));
                let w = rule.weights[q] * jac;
                for s in 0..P3_LOCAL {
                    local[s] += w * fx[0] * table.values[s];
                    local[P3_LOCAL + s] += w * fx[1] * table.values[s];
                }
            }
            local
        })
        .collect();
    let mut b = vec![0.0; broken.dim()];
    for (t, local) in blocks.iter().enumerate() {
        for c in 0..2 {
            for s in 0..P3_LOCAL {
                b[broken.dof(c, t, s)] += local[c * P3_LOCAL + s];
            }
        }
    }
    Ok(b)
}

pub fn assemble_rhs_coefficients(mesh: &TriMesh, f: [&Coefficient; 2]) -> Result<Vec<f64>> {
    assemble_rhs(mesh, |x| [f[0].eval(x), f[1].eval(x)])
}

/// Exact vector field with derivatives up to second order; Hessians as (h11, h12, h22).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactValue {
    pub value: [f64; 2],
    pub grad: [[f64; 2]; 2],
    pub hess: [[f64; 3]; 2],
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Broken L2 norm and H1, H2 seminorms of w - w_h.
pub fn error_norms<F>(mesh: &TriMesh, broken_coeffs: &[f64], exact: F) -> Result<ErrorNorms>
where
    F: Fn([f64; 2]) -> ExactValue + Sync,
{
    let broken = BrokenSpace::new(mesh, 2);
    if broken_coeffs.len() != broken.dim() {
        return Err(Error::InvalidSpec("coefficient vector does not match the broken space".into()));
    }
    let rule = triangle_quadrature(DATA_DEGREE)?;
    let reference = reference_tables(&rule);
    let sums: Vec<[f64; 3]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let map = mesh.map(t);
            let jac = map.det.abs();
            let mut acc = [0.0; 3];
            for (q, table) in reference.iter().enumerate() {
                let x = map.to_physical(rule.points[q]);
                let ex = exact(x);
                let phys = table.push_forward(&map);
                let w = rule.weights[q] * jac;
                for c in 0..2 {
                    let mut v = ex.value[c];
                    let mut g = ex.grad[c];
                    let mut h = ex.hess[c];
                    for s in 0..P3_LOCAL {
                        let a = broken_coeffs[broken.dof(c, t, s)];
                        v -= a * phys.values[s];
                        g[0] -= a * phys.gradients[s][0];
                        g[1] -= a * phys.gradients[s][1];
                        for k in 0..3 {
                            h[k] -= a * phys.hessians[s][k];
                        }
                    }
                    acc[0] += w * v * v;
                    acc[1] += w * (g[0] * g[0] + g[1] * g[1]);
                    acc[2] += w * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
                }
            }
            acc
        })
        .collect();
    let total = sums.iter().fold([0.0; 3], |a, s| [a[0] + s[0], a[1] + s[1], a[2] + s[2]]);
    Ok(ErrorNorms { l2: total[0].sqrt(), h1: total[1].sqrt(), h2: total[2].sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_domain, AffineMap, Domain};
    use nalgebra::Point2;

    const LAME: Lame = Lame { lambda: 0.25, mu: 0.0625 };

    #[test]
    fn mass_sums_to_area() {
        for d in [Domain::UnitSquare, Domain::LShape] {
            let m = generate_domain(d, 1).unwrap();
            let a = assemble(&m, 1, &FormKind::Mass(1.0.into()), LAME).unwrap();
            let s: f64 = a.matrix.triplets().iter().map(|t| t.2).sum();
            assert!((s - d.area()).abs() < 1e-13);
        }
    }

    #[test]
    fn rhs_of_unit_load_sums_to_area() {
        let m = generate_domain(Domain::RightTriangle, 1).unwrap();
        let b = assemble_rhs(&m, |_| [1.0, 0.0]).unwrap();
        let half = b.len() / 2;
        assert!((b[..half].iter().sum::<f64>() - 0.5).abs() < 1e-14);
        assert!(b[half..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn trig_integral_matches_closed_form() {
        let m = generate_domain(Domain::UnitSquare, 2).unwrap();
        let b = assemble_rhs(&m, |p| {
            let pi = std::f64::consts::PI;
            [(pi * p[0]).sin() * (pi * p[1]).sin(), 0.0]
        })
        .unwrap();
        let half = b.len() / 2;
        let s: f64 = b[..half].iter().sum();
        let expect = 4.0 / std::f64::consts::PI.powi(2);
        assert!((s - expect).abs() < 1e-8, "{s} vs {expect}");
    }

    fn reference_mesh() -> TriMesh {
        TriMesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 1.0).unwrap()
    }

    #[test]
    fn rigid_and_linear_fields_are_in_kernel() {
        let m = reference_mesh();
        let a = assemble(&m, 2, &FormKind::BiElastic(1.0.into()), LAME).unwrap();
        let nodes = ShapeSet::p3().nodes;
        let mut x: Vec<f64> = nodes.iter().map(|p| p[0]).collect();
        x.extend(nodes.iter().map(|p| p[1]));
        assert!(a.matrix.mul_vec(&x).iter().all(|v| v.abs() < 1e-12));
    }

    /// Independent kernel: second derivatives of the P3 Lagrange basis from monomial coefficients.
    fn monomial_hessians(xi: [f64; 2]) -> Vec<[f64; 3]> {
        let nodes = ShapeSet::p3().nodes;
        let exps: Vec<(i32, i32)> = (0..=3).flat_map(|d| (0..=d).map(move |j| (d - j, j))).collect();
        let v = nalgebra::DMatrix::from_fn(10, 10, |r, c| {
            let (i, j) = exps[c];
            nodes[r][0].powi(i) * nodes[r][1].powi(j)
        });
        let coef = v.try_inverse().unwrap();
        let d2 = |i: i32, j: i32, a: usize, b: usize| -> f64 {
            let (x, y) = (xi[0], xi[1]);
            match (a, b) {
                (0, 0) if i >= 2 => (i * (i - 1)) as f64 * x.powi(i - 2) * y.powi(j),
                (0, 1) if i >= 1 && j >= 1 => (i * j) as f64 * x.powi(i - 1) * y.powi(j - 1),
                (1, 1) if j >= 2 => (j * (j - 1)) as f64 * x.powi(i) * y.powi(j - 2),
                _ => 0.0,
            }
        };
        (0..10)
            .map(|f| {
                let mut h = [0.0; 3];
                for (c, &(i, j)) in exps.iter().enumerate() {
                    h[0] += coef[(c, f)] * d2(i, j, 0, 0);
                    h[1] += coef[(c, f)] * d2(i, j, 0, 1);
                    h[2] += coef[(c, f)] * d2(i, j, 1, 1);
                }
                h
            })
            .collect()
    }

    #[test]
    fn bielastic_kernel_matches_monomial_oracle() {
        let m = reference_mesh();
        let a = assemble(&m, 2, &FormKind::BiElastic(1.0.into()), LAME).unwrap().matrix.to_dense();
        let rule = triangle_quadrature(6).unwrap();
        let mut oracle = nalgebra::DMatrix::<f64>::zeros(20, 20);
        let Lame { lambda: l, mu } = LAME;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let hs = monomial_hessians(*p);
            let ds = |k: usize| -> [f64; 2] {
                let h = hs[k % 10];
                if k < 10 {
                    [(l + 2.0 * mu) * h[0] + mu * h[2], (l + mu) * h[1]]
                } else {
                    [(l + mu) * h[1], mu * h[0] + (l + 2.0 * mu) * h[2]]
                }
            };
            for i in 0..20 {
                for j in 0..20 {
                    let (a, b) = (ds(i), ds(j));
                    oracle[(i, j)] += w * (a[0] * b[0] + a[1] * b[1]);
                }
            }
        }
        assert!((a - oracle).abs().max() < 1e-12);
    }

    #[test]
    fn symmetric_kinds_are_symmetric() {
        let m = generate_domain(Domain::EquilateralTriangle, 1).unwrap();
        let c = Coefficient::radial_quadratic(4.0);
        for kind in [
            FormKind::Mass(c.clone()),
            FormKind::BiElastic(c.clone()),
            FormKind::ElasticEnergy,
            FormKind::HessianFull(c.clone()),
            FormKind::GradDiv(c.clone()),
            FormKind::LaplacePair(c.clone()),
            FormKind::CurlRot(c.clone()),
        ] {
            let a = assemble(&m, 2, &kind, LAME).unwrap();
            assert!(a.matrix.asymmetry() <= 1e-12 * a.matrix.max_abs(), "{}", kind.name());
        }
    }

    #[test]
    fn nonpositive_coefficient_rejected() {
        let m = generate_domain(Domain::UnitSquare, 0).unwrap();
        let r = assemble(&m, 2, &FormKind::BiElastic(Coefficient::affine(0.5, -1.0, 0.0)), LAME);
        assert!(matches!(r, Err(Error::NonPositiveCoefficient { .. })));
        assert!(assemble(&m, 1, &FormKind::BiElastic(1.0.into()), LAME).is_err());
    }

    #[test]
    fn zero_error_for_interpolated_cubic() {
        let m = generate_domain(Domain::UnitSquare, 1).unwrap();
        let broken = BrokenSpace::new(&m, 2);
        let nodes = ShapeSet::p3().nodes;
        let w = |p: [f64; 2]| [p[0] * p[0] * p[1], p[1] * p[1] - p[0]];
        let mut coeffs = vec![0.0; broken.dim()];
        for t in 0..m.n_triangles() {
            let map: AffineMap = m.map(t);
            for (s, &xi) in nodes.iter().enumerate() {
                let v = w(map.to_physical(xi));
                coeffs[broken.dof(0, t, s)] = v[0];
                coeffs[broken.dof(1, t, s)] = v[1];
            }
        }
        let e = error_norms(&m, &coeffs, |p| ExactValue {
            value: w(p),
            grad: [[2.0 * p[0] * p[1], p[0] * p[0]], [-1.0, 2.0 * p[1]]],
            hess: [[2.0 * p[1], 2.0 * p[0], 0.0], [0.0, 0.0, 2.0]],
        })
        .unwrap();
        assert!(e.l2 < 1e-13 && e.h1 < 1e-12 && e.h2 < 1e-11, "{e:?}");
        let _ = Point2::new(0.0, 0.0);
    }
}
