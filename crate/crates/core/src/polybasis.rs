use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::AffineMap;

/// Affine function c + g . xi on the reference triangle.
#[derive(Debug, Clone, Copy)]
struct Affine {
    c: f64,
    g: [f64; 2],
}

impl Affine {
    fn eval(&self, xi: [f64; 2]) -> f64 {
        self.c + self.g[0] * xi[0] + self.g[1] * xi[1]
    }

    fn scaled(&self, s: f64, shift: f64) -> Affine {
        Affine { c: s * self.c + shift, g: [s * self.g[0], s * self.g[1]] }
    }
}

const BARY: [Affine; 3] = [
    Affine { c: 1.0, g: [-1.0, -1.0] },
    Affine { c: 0.0, g: [1.0, 0.0] },
    Affine { c: 0.0, g: [0.0, 1.0] },
];

/// A basis function written as `scale * prod(factors)`.
#[derive(Debug, Clone)]
struct Product {
    scale: f64,
    factors: Vec<Affine>,
}

impl Product {
    fn eval(&self, xi: [f64; 2]) -> (f64, [f64; 2], [f64; 3]) {
        let n = self.factors.len();
        let vals: Vec<f64> = self.factors.iter().map(|f| f.eval(xi)).collect();
        let others = |skip: &[usize]| -> f64 {
            (0..n).filter(|k| !skip.contains(k)).map(|k| vals[k]).product()
        };
        let v = self.scale * others(&[]);
        let mut g = [0.0; 2];
        let mut h = [0.0; 3];
        for a in 0..n {
            let ga = self.factors[a].g;
            let pa = others(&[a]);
            g[0] += ga[0] * pa;
            g[1] += ga[1] * pa;
            for b in 0..n {
                if a == b {
                    continue;
                }
                let gb = self.factors[b].g;
                let pab = others(&[a, b]);
                h[0] += ga[0] * gb[0] * pab;
                h[1] += ga[0] * gb[1] * pab;
                h[2] += ga[1] * gb[1] * pab;
            }
        }
        (v, g.map(|x| self.scale * x), h.map(|x| self.scale * x))
    }
}

/// Values, gradients and Hessians (h11, h12, h22) of every basis function at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PointTable {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    pub hessians: Vec<[f64; 3]>,
}

impl PointTable {
    /// Maps reference derivatives to a physical triangle.
    pub fn push_forward(&self, map: &AffineMap) -> PointTable {
        PointTable {
            values: self.values.clone(),
            gradients: self.gradients.iter().map(|&g| map.push_gradient(g)).collect(),
            hessians: self.hessians.iter().map(|&h| map.push_hessian(h)).collect(),
        }
    }
}

/// Lagrange basis of degree 2 or 3 on the reference triangle.
///
/// Ordering: vertex nodes 0..3, then edge nodes grouped by local edge (edge `k` is opposite
/// vertex `k`), then the cubic bubble node.
#[derive(Debug, Clone)]
pub struct ShapeSet {
    pub degree: usize,
    pub nodes: Vec<[f64; 2]>,
    functions: Vec<Product>,
}

impl ShapeSet {
    pub fn p2() -> Self {
        let mut functions = Vec::with_capacity(6);
        let mut nodes = Vec::with_capacity(6);
        for (i, l) in BARY.iter().enumerate() {
            functions.push(Product { scale: 1.0, factors: vec![*l, l.scaled(2.0, -1.0)] });
            nodes.push(vertex_node(i));
        }
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            functions.push(Product { scale: 4.0, factors: vec![BARY[a], BARY[b]] });
            nodes.push(bary_point(a, b, 0.5));
        }
        ShapeSet { degree: 2, nodes, functions }
    }

    pub fn p3() -> Self {
        let mut functions = Vec::with_capacity(10);
        let mut nodes = Vec::with_capacity(10);
        for (i, l) in BARY.iter().enumerate() {
            functions.push(Product {
                scale: 0.5,
                factors: vec![*l, l.scaled(3.0, -1.0), l.scaled(3.0, -2.0)],
            });
            nodes.push(vertex_node(i));
        }
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            functions.push(Product {
                scale: 4.5,
                factors: vec![BARY[a], BARY[b], BARY[a].scaled(3.0, -1.0)],
            });
            nodes.push(bary_point(a, b, 2.0 / 3.0));
            functions.push(Product {
                scale: 4.5,
                factors: vec![BARY[a], BARY[b], BARY[b].scaled(3.0, -1.0)],
            });
            nodes.push(bary_point(a, b, 1.0 / 3.0));
        }
        functions.push(Product { scale: 27.0, factors: BARY.to_vec() });
        nodes.push([1.0 / 3.0, 1.0 / 3.0]);
        ShapeSet { degree: 3, nodes, functions }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Evaluates without the inside-the-element check.
    pub fn eval(&self, xi: [f64; 2]) -> PointTable {
        let mut values = Vec::with_capacity(self.len());
        let mut gradients = Vec::with_capacity(self.len());
        let mut hessians = Vec::with_capacity(self.len());
        for f in &self.functions {
            let (v, g, h) = f.eval(xi);
            values.push(v);
            gradients.push(g);
            hessians.push(h);
        }
        PointTable { values, gradients, hessians }
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> Result<Vec<PointTable>> {
        const TOL: f64 = 1e-12;
        points
            .iter()
            .map(|&p| {
                if p[0] < -TOL || p[1] < -TOL || p[0] + p[1] > 1.0 + TOL {
                    return Err(Error::OutsideReference(p[0], p[1]));
                }
                Ok(self.eval(p))
            })
            .collect()
    }
}

fn vertex_node(i: usize) -> [f64; 2] {
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]][i]
}

/// Point with barycentric weight `t` on vertex `a` and `1 - t` on vertex `b`.
fn bary_point(a: usize, b: usize, t: f64) -> [f64; 2] {
    let (pa, pb) = (vertex_node(a), vertex_node(b));
    [t * pa[0] + (1.0 - t) * pb[0], t * pa[1] + (1.0 - t) * pb[1]]
}

pub fn p3_tabulate(points: &[[f64; 2]]) -> Result<Vec<PointTable>> {
    ShapeSet::p3().tabulate(points)
}

/// Lamé constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Lame { lambda, mu }
    }

    pub fn is_valid(&self) -> bool {
        self.lambda > 0.0 && self.mu > 0.0 && self.lambda.is_finite() && self.mu.is_finite()
    }
}

/// div sigma(w) for a vector field with component Hessians `h1`, `h2` given as (h11, h12, h22).
pub fn divsigma(lame: Lame, h1: [f64; 3], h2: [f64; 3]) -> [f64; 2] {
    let Lame { lambda, mu } = lame;
    [
        (lambda + 2.0 * mu) * h1[0] + mu * h1[2] + (lambda + mu) * h2[1],
        (lambda + mu) * h1[1] + mu * h2[0] + (lambda + 2.0 * mu) * h2[2],
    ]
}

/// div sigma(w) at a reference point for a local P3 vector field given by Lagrange coefficients.
pub fn divsigma_eval(lame: Lame, coeffs: [&[f64]; 2], map: &AffineMap, xi: [f64; 2]) -> [f64; 2] {
    let table = ShapeSet::p3().eval(xi).push_forward(map);
    let hess = |c: &[f64]| {
        let mut h = [0.0; 3];
        for (ci, hi) in c.iter().zip(&table.hessians) {
            for k in 0..3 {
                h[k] += ci * hi[k];
            }
        }
        h
    };
    divsigma(lame, hess(coeffs[0]), hess(coeffs[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point2;

    #[test]
    fn kronecker_and_partition_of_unity() {
        for set in [ShapeSet::p2(), ShapeSet::p3()] {
            for (j, &node) in set.nodes.iter().enumerate() {
                let t = set.eval(node);
                for (i, v) in t.values.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-14, "degree {} fn {i} node {j}", set.degree);
                }
            }
            for xi in [[1.0 / 3.0, 1.0 / 3.0], [0.1, 0.7], [0.0, 0.0]] {
                let t = set.eval(xi);
                assert!((t.values.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                let g = t.gradients.iter().fold([0.0; 2], |a, g| [a[0] + g[0], a[1] + g[1]]);
                assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
                let h = t.hessians.iter().fold([0.0; 3], |a, h| [a[0] + h[0], a[1] + h[1], a[2] + h[2]]);
                assert!(h.iter().all(|x| x.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn bubble_hessian_matches_symbolic() {
        // 27 l0 l1 l2 = 27 (xy - x^2 y - x y^2): Hessian (-54y, 27 - 54x - 54y, -54x).
        let t = ShapeSet::p3().eval([1.0 / 3.0, 1.0 / 3.0]);
        let h = t.hessians[9];
        assert!((h[0] + 18.0).abs() < 1e-13);
        assert!((h[1] + 9.0).abs() < 1e-13);
        assert!((h[2] + 18.0).abs() < 1e-13);
        let t = ShapeSet::p3().eval([0.2, 0.5]);
        let h = t.hessians[9];
        assert!((h[0] + 27.0).abs() < 1e-13);
        assert!((h[1] - (27.0 - 54.0 * 0.7)).abs() < 1e-13);
        assert!((h[2] + 10.8).abs() < 1e-13);
    }

    #[test]
    fn outside_points_rejected() {
        assert!(p3_tabulate(&[[0.8, 0.3]]).is_err());
        assert!(p3_tabulate(&[[1.0, 0.0]]).is_ok());
    }

    #[test]
    fn divsigma_of_quadratic_field() {
        let set = ShapeSet::p3();
        let map = AffineMap::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
        let c1: Vec<f64> = set.nodes.iter().map(|p| p[0] * p[0]).collect();
        let c2: Vec<f64> = set.nodes.iter().map(|p| p[1] * p[1]).collect();
        let lame = Lame::new(0.25, 1.0 / 16.0);
        let d = divsigma_eval(lame, [&c1, &c2], &map, [0.2, 0.3]);
        assert!((d[0] - 0.75).abs() < 1e-13 && (d[1] - 0.75).abs() < 1e-13);
        let l1: Vec<f64> = set.nodes.iter().map(|p| p[0]).collect();
        let l2: Vec<f64> = set.nodes.iter().map(|p| p[1]).collect();
        let d = divsigma_eval(lame, [&l1, &l2], &map, [0.2, 0.3]);
        assert!(d[0].abs() < 1e-13 && d[1].abs() < 1e-13);
    }
}
