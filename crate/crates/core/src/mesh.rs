use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{Matrix2, Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Refinement levels above this are rejected unless a larger cap is passed explicitly.
pub const DEFAULT_MAX_LEVEL: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    UnitSquare,
    RightTriangle,
    EquilateralTriangle,
    LShape,
}

impl Domain {
    pub const ALL: [Domain; 4] = [
        Domain::UnitSquare,
        Domain::RightTriangle,
        Domain::EquilateralTriangle,
        Domain::LShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit-square",
            Domain::RightTriangle => "right-triangle",
            Domain::EquilateralTriangle => "equilateral-triangle",
            Domain::LShape => "l-shape",
        }
    }

    pub fn area(self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::RightTriangle => 0.5,
            Domain::EquilateralTriangle => 3f64.sqrt() / 4.0,
            Domain::LShape => 0.75,
        }
    }

    /// Closed-domain membership test.
    pub fn contains(self, p: [f64; 2]) -> bool {
        let [x, y] = p;
        let eps = 1e-14;
        match self {
            Domain::UnitSquare => (-eps..=1.0 + eps).contains(&x) && (-eps..=1.0 + eps).contains(&y),
            Domain::RightTriangle => x >= -eps && y >= -eps && x + y <= 1.0 + eps,
            Domain::EquilateralTriangle => {
                let s = 3f64.sqrt();
                y >= -eps && y <= s * x + eps && y <= s * (1.0 - x) + eps
            }
            Domain::LShape => {
                Domain::UnitSquare.contains(p) && !(x > 0.5 + eps && y > 0.5 + eps)
            }
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "unit-square" | "square" => Ok(Domain::UnitSquare),
            "right-triangle" | "triangle" => Ok(Domain::RightTriangle),
            "equilateral-triangle" | "equilateral" => Ok(Domain::EquilateralTriangle),
            "l-shape" | "lshape" | "l" => Ok(Domain::LShape),
            _ => Err(Error::UnknownDomain(s.to_string())),
        }
    }
}

/// Affine map from the reference triangle (0,0),(1,0),(0,1) onto a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Point2<f64>,
    pub jac: Matrix2<f64>,
    pub inv: Matrix2<f64>,
    pub det: f64,
}

impl AffineMap {
    pub fn new(p0: Point2<f64>, p1: Point2<f64>, p2: Point2<f64>) -> Self {
        let jac = Matrix2::from_columns(&[p1 - p0, p2 - p0]);
        let det = jac.determinant();
        let inv = Matrix2::new(jac[(1, 1)], -jac[(0, 1)], -jac[(1, 0)], jac[(0, 0)]) / det;
        AffineMap { origin: p0, jac, inv, det }
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        let p = self.origin + self.jac * Vector2::new(xi[0], xi[1]);
        [p.x, p.y]
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let r = self.inv * (Vector2::new(x[0], x[1]) - self.origin.coords);
        [r.x, r.y]
    }

    /// Physical gradient from a reference gradient.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let i = &self.inv;
        [i[(0, 0)] * g[0] + i[(1, 0)] * g[1], i[(0, 1)] * g[0] + i[(1, 1)] * g[1]]
    }

    /// Physical Hessian (h11, h12, h22) from a reference Hessian.
    pub fn push_hessian(&self, h: [f64; 3]) -> [f64; 3] {
        let i = &self.inv;
        let (a, b, c, d) = (i[(0, 0)], i[(0, 1)], i[(1, 0)], i[(1, 1)]);
        // H_x = Jinv^T H_xi Jinv, Jinv = [[a, b], [c, d]]
        let h11 = a * a * h[0] + 2.0 * a * c * h[1] + c * c * h[2];
        let h12 = a * b * h[0] + (a * d + b * c) * h[1] + c * d * h[2];
        let h22 = b * b * h[0] + 2.0 * b * d * h[1] + d * d * h[2];
        [h11, h12, h22]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Oriented from the lower to the higher vertex index.
    pub edges: Vec<[usize; 2]>,
    /// First adjacent triangle and, for interior edges, the second.
    pub edge_to_triangles: Vec<(usize, Option<usize>)>,
    /// Local edge `i` of a triangle is the edge opposite local vertex `i`.
    pub triangle_edges: Vec<[usize; 3]>,
    pub vertex_to_triangles: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
    /// Nominal mesh size h0 / 2^level.
    pub h: f64,
    pub level: usize,
    pub domain: Option<Domain>,
}

impl TriMesh {
    /// Builds the topology of a triangulation given its vertices and counterclockwise triangles.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, h: f64) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::DegenerateMesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if area2 <= 0.0 {
                return Err(Error::DegenerateMesh(format!("triangle {t} has nonpositive area")));
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut adjacency: Vec<(usize, Option<usize>)> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    adjacency.push((t, None));
                    edges.len() - 1
                });
                if adjacency[e].0 != t {
                    if adjacency[e].1.is_some() {
                        return Err(Error::DegenerateMesh(format!("edge {key:?} has more than two triangles")));
                    }
                    adjacency[e].1 = Some(t);
                }
                *slot = e;
            }
            triangle_edges.push(local);
        }

        let mut boundary_vertex = vec![false; nv];
        let boundary_edge: Vec<bool> = adjacency.iter().map(|a| a.1.is_none()).collect();
        for (e, &[a, b]) in edges.iter().enumerate() {
            if boundary_edge[e] {
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
            }
            let len = dist(vertices[a], vertices[b]);
            if len <= 0.0 {
                return Err(Error::DegenerateMesh(format!("edge {e} has zero length")));
            }
        }
        let mut vertex_to_triangles = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_to_triangles[v].push(t);
            }
        }

        Ok(TriMesh {
            vertices,
            triangles,
            edges,
            edge_to_triangles: adjacency,
            triangle_edges,
            vertex_to_triangles,
            boundary_vertex,
            boundary_edge,
            h,
            level: 0,
            domain: None,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(|&v| !self.boundary_vertex[v])
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(|&e| !self.boundary_edge[e])
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|b| !**b).count()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.boundary_edge.iter().filter(|b| !**b).count()
    }

    pub fn point(&self, v: usize) -> Point2<f64> {
        Point2::new(self.vertices[v][0], self.vertices[v][1])
    }

    pub fn map(&self, t: usize) -> AffineMap {
        let [a, b, c] = self.triangles[t];
        AffineMap::new(self.point(a), self.point(b), self.point(c))
    }

    pub fn area(&self, t: usize) -> f64 {
        0.5 * self.map(t).det
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Unit tangent from the lower-index vertex to the higher one.
    pub fn edge_tangent(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let l = self.edge_length(e);
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [(pb[0] - pa[0]) / l, (pb[1] - pa[1]) / l]
    }

    /// Tangent rotated 90 degrees clockwise.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let t = self.edge_tangent(e);
        [t[1], -t[0]]
    }

    /// Point on edge `e` at arclength fraction `s` measured from the lower-index vertex.
    pub fn edge_point(&self, e: usize, s: f64) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
    }

    /// Position of global vertex `v` inside triangle `t`.
    pub fn local_vertex(&self, t: usize, v: usize) -> Option<usize> {
        self.triangles[t].iter().position(|&w| w == v)
    }

    /// Position of global edge `e` inside triangle `t`.
    pub fn local_edge(&self, t: usize, e: usize) -> Option<usize> {
        self.triangle_edges[t].iter().position(|&w| w == e)
    }

    /// Edges incident to vertex `v`, in ascending order.
    pub fn vertex_edges(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vertex_to_triangles[v]
            .iter()
            .flat_map(|&t| self.triangle_edges[t])
            .filter(|&e| self.edges[e].contains(&v))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.n_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for tri in &self.triangles {
            for i in 0..3 {
                let p = self.vertices[tri[i]];
                let q = self.vertices[tri[(i + 1) % 3]];
                let r = self.vertices[tri[(i + 2) % 3]];
                let u = [q[0] - p[0], q[1] - p[1]];
                let v = [r[0] - p[0], r[1] - p[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(p, q) * dist(p, r));
                best = best.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        best
    }

    /// Red refinement: every triangle is split into four through its edge midpoints.
    ///
    /// Midpoint of edge `e` becomes vertex `V + e`; children of triangle `t` are `4t..4t+4`.
    pub fn refine_uniform(&self) -> TriMesh {
        let nv = self.n_vertices();
        let mut vertices = self.vertices.clone();
        for &[a, b] in &self.edges {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
        let mut triangles = Vec::with_capacity(4 * self.n_triangles());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [ea, eb, ec] = self.triangle_edges[t];
            let (ma, mb, mc) = (nv + ea, nv + eb, nv + ec);
            triangles.push([a, mc, mb]);
            triangles.push([mc, b, ma]);
            triangles.push([mb, ma, c]);
            triangles.push([ma, mb, mc]);
        }
        let mut out = TriMesh::from_parts(vertices, triangles, 0.5 * self.h)
            .expect("refinement of a valid mesh is valid");
        out.level = self.level + 1;
        out.domain = self.domain;
        out
    }

    /// Plain-text dump with `vertices`, `triangles` and `edges` sections.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "vertices {}", self.n_vertices())?;
        for p in &self.vertices {
            writeln!(w, "{:.16e} {:.16e}", p[0], p[1])?;
        }
        writeln!(w, "triangles {}", self.n_triangles())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "edges {}", self.n_edges())?;
        for (e, pair) in self.edges.iter().enumerate() {
            writeln!(w, "{} {} {}", pair[0], pair[1], u8::from(self.boundary_edge[e]))?;
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn coarse(domain: Domain) -> TriMesh {
    // Square cells are split along the diagonal from (i+1, j) to (i, j+1).
    let cells = |cells: &[(usize, usize)], verts: &HashMap<(usize, usize), usize>| {
        let mut tris = Vec::new();
        for &(i, j) in cells {
            let a = verts[&(i, j)];
            let b = verts[&(i + 1, j)];
            let c = verts[&(i + 1, j + 1)];
            let d = verts[&(i, j + 1)];
            tris.push([a, b, d]);
            tris.push([b, c, d]);
        }
        tris
    };
    let grid = |keep: &dyn Fn(usize, usize) -> bool| {
        let mut verts = HashMap::new();
        let mut coords = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                if keep(i, j) {
                    verts.insert((i, j), coords.len());
                    coords.push([0.5 * i as f64, 0.5 * j as f64]);
                }
            }
        }
        (verts, coords)
    };
    match domain {
        Domain::UnitSquare => {
            let (verts, coords) = grid(&|_, _| true);
            let tris = cells(&[(0, 0), (1, 0), (0, 1), (1, 1)], &verts);
            TriMesh::from_parts(coords, tris, 0.5).expect("valid coarse mesh")
        }
        Domain::LShape => {
            let (verts, coords) = grid(&|i, j| !(i == 2 && j == 2));
            let tris = cells(&[(0, 0), (1, 0), (0, 1)], &verts);
            TriMesh::from_parts(coords, tris, 0.5).expect("valid coarse mesh")
        }
        Domain::RightTriangle => {
            let m = TriMesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 1.0)
                .expect("valid coarse mesh");
            let mut r = m.refine_uniform();
            r.level = 0;
            r
        }
        Domain::EquilateralTriangle => {
            let m = TriMesh::from_parts(
                vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]],
                vec![[0, 1, 2]],
                1.0,
            )
            .expect("valid coarse mesh");
            // One level finer than the other domains so that level 1 has edge length 1/8.
            let mut r = m.refine_uniform().refine_uniform();
            r.level = 0;
            r
        }
    }
}

pub fn generate_domain(domain: Domain, level: usize) -> Result<TriMesh> {
    generate_domain_capped(domain, level, DEFAULT_MAX_LEVEL)
}

pub fn generate_domain_capped(domain: Domain, level: usize, cap: usize) -> Result<TriMesh> {
    if level > cap {
        return Err(Error::LevelCap { level, cap });
    }
    let mut mesh = coarse(domain);
    mesh.domain = Some(domain);
    for _ in 0..level {
        mesh = mesh.refine_uniform();
    }
    Ok(mesh)
}

pub fn refine_uniform(mesh: &TriMesh) -> TriMesh {
    mesh.refine_uniform()
}
