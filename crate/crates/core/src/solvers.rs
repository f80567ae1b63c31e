use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, assemble_rhs, error_norms, ErrorNorms, ExactValue, FormKind, MASS_DEGREE};
use crate::coefficient::Coefficient;
use crate::eigen::{eig_quadratic, eig_sym_gen, EigMethod, EigOptions, SpdSolver};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::mesh::{generate_domain, Domain, TriMesh};
use crate::polybasis::Lame;
use crate::quadrature::triangle_quadrature;
use crate::sparse::{norm2, CsrMatrix};
use crate::spaces::{ElementKind, FemSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TepMethod {
    #[default]
    Secant,
    Quadratic,
}

impl std::str::FromStr for TepMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "secant" => Ok(TepMethod::Secant),
            "quadratic" => Ok(TepMethod::Quadratic),
            _ => Err(Error::InvalidSpec(format!("unknown method `{s}`"))),
        }
    }
}

impl std::fmt::Display for TepMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TepMethod::Secant => "secant",
            TepMethod::Quadratic => "quadratic",
        })
    }
}

/// Which density ordering the transmission forms are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DensityCase {
    /// Detected from the sign of rho1 - rho0 at the quadrature points.
    #[default]
    Auto,
    /// rho1 > rho0 everywhere.
    Forward,
    /// rho0 > rho1 everywhere; the roles are exchanged.
    Swapped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    Source {
        beta: Coefficient,
        f: [Coefficient; 2],
        exact: Option<[Coefficient; 2]>,
    },
    BiElasticEig {
        beta: Coefficient,
        k: usize,
    },
    Tep {
        rho0: Coefficient,
        rho1: Coefficient,
        k: usize,
        method: TepMethod,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub level: usize,
    pub element: ElementKind,
    pub lame: Lame,
    pub kind: ProblemKind,
    /// Morley stabilization; defaults to half the admissible bound.
    pub alpha: Option<f64>,
    pub density: DensityCase,
    /// Highest level accepted without an explicit override.
    pub level_cap: usize,
}

impl ProblemSpec {
    pub fn new(domain: Domain, level: usize, lame: Lame, kind: ProblemKind) -> Self {
        ProblemSpec {
            domain,
            level,
            element: ElementKind::B3,
            lame,
            kind,
            alpha: None,
            density: DensityCase::Auto,
            level_cap: crate::mesh::DEFAULT_MAX_LEVEL,
        }
    }

    pub fn with_element(mut self, element: ElementKind) -> Self {
        self.element = element;
        self
    }

    pub fn with_alpha(mut self, alpha: Option<f64>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lame.is_valid() {
            return Err(Error::InvalidSpec(format!("Lamé constants must be positive, got {:?}", self.lame)));
        }
        if self.level > self.level_cap {
            return Err(Error::LevelCap { level: self.level, cap: self.level_cap });
        }
        if self.alpha.is_some() && self.element == ElementKind::B3 {
            return Err(Error::InvalidSpec("alpha applies only to the morley element".into()));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidSpec(format!("alpha must be positive, got {a}")));
            }
        }
        match &self.kind {
            ProblemKind::BiElasticEig { k, .. } | ProblemKind::Tep { k, .. } if *k == 0 => {
                Err(Error::InvalidSpec("k must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Physical quadrature points of every triangle.
pub fn quadrature_points(mesh: &TriMesh, degree: usize) -> Result<Vec<[f64; 2]>> {
    let rule = triangle_quadrature(degree)?;
    Ok((0..mesh.n_triangles())
        .flat_map(|t| {
            let map = mesh.map(t);
            rule.points.iter().map(move |&p| map.to_physical(p)).collect::<Vec<_>>()
        })
        .collect())
}

/// Weight of the grad-div term that makes the split consistent with the bi-elastic form.
pub fn graddiv_split_constant(lame: Lame) -> f64 {
    let Lame { lambda, mu } = lame;
    (lambda + 2.0 * mu).powi(2) - mu * mu
}

/// Fourth-order block with weight `w`; on Morley spaces part of it is replaced by the
/// coercive Hessian and grad-div terms scaled by `alpha`.
fn fourth_order(space: &FemSpace, w: &Coefficient, lame: Lame, alpha: Option<f64>) -> Result<CsrMatrix> {
    let mesh = &space.mesh;
    match (space.element, alpha) {
        (ElementKind::B3, _) | (ElementKind::Morley, None) => {
            Ok(space.reduce(&assemble(mesh, 2, &FormKind::BiElastic(w.clone()), lame)?.matrix))
        }
        (ElementKind::Morley, Some(a)) => {
            let rest = w.sub(&Coefficient::constant(a));
            let bi = assemble(mesh, 2, &FormKind::BiElastic(rest), lame)?.matrix;
            let hess = assemble(mesh, 2, &FormKind::HessianFull(Coefficient::constant(a * lame.mu * lame.mu)), lame)?.matrix;
            let gd = assemble(mesh, 2, &FormKind::GradDiv(Coefficient::constant(a * graddiv_split_constant(lame))), lame)?.matrix;
            Ok(space.reduce(&bi.add(&hess).add(&gd)))
        }
    }
}

fn resolve_alpha(spec: &ProblemSpec, bound: f64) -> Result<Option<f64>> {
    if spec.element == ElementKind::B3 {
        return Ok(None);
    }
    let alpha = spec.alpha.unwrap_or(0.5 * bound);
    if !(alpha > 0.0 && alpha < bound) {
        return Err(Error::InvalidSpec(format!("alpha {alpha} outside the admissible interval (0, {bound})")));
    }
    Ok(Some(alpha))
}

fn build_space(spec: &ProblemSpec) -> Result<(Arc<TriMesh>, FemSpace)> {
    spec.validate()?;
    let mesh = Arc::new(crate::mesh::generate_domain_capped(spec.domain, spec.level, spec.level_cap)?);
    let space = FemSpace::new(spec.element, mesh.clone(), 2)?;
    Ok((mesh, space))
}

fn coefficient_min(mesh: &TriMesh, c: &Coefficient) -> Result<f64> {
    Ok(c.min_over(quadrature_points(mesh, MASS_DEGREE)?))
}

pub fn exact_value(w: &[Coefficient; 2], p: [f64; 2]) -> ExactValue {
    let (x, y) = (Jet::var(p[0], 0), Jet::var(p[1], 1));
    let a = w[0].eval_generic(x, y);
    let b = w[1].eval_generic(x, y);
    ExactValue { value: [a.v, b.v], grad: [a.g, b.g], hess: [a.h, b.h] }
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceSolution {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub alpha: Option<f64>,
    #[serde(skip)]
    pub broken: Vec<f64>,
    pub norms: Option<ErrorNorms>,
    /// Relative residual of the linear solve.
    pub residual: f64,
    pub seconds: f64,
}

pub fn solve_source(spec: &ProblemSpec) -> Result<SourceSolution> {
    let ProblemKind::Source { beta, f, exact } = &spec.kind else {
        return Err(Error::InvalidSpec("solve_source needs a source problem".into()));
    };
    let start = Instant::now();
    let (mesh, space) = build_space(spec)?;
    let alpha = resolve_alpha(spec, coefficient_min(&mesh, beta)?)?;
    let a = fourth_order(&space, beta, spec.lame, alpha)?;
    let b = space.reduce_vector(&assemble_rhs(&mesh, |p| [f[0].eval(p), f[1].eval(p)])?);
    let x = SpdSolver::new(&a)?.solve(&b);
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let residual = if norm2(&b) > 0.0 { norm2(&r) / norm2(&b) } else { norm2(&r) };
    let broken = space.expand(&x);
    let norms = match exact {
        Some(w) => Some(error_norms(&mesh, &broken, |p| exact_value(w, p))?),
        None => None,
    };
    Ok(SourceSolution {
        level: spec.level,
        h: mesh.h,
        dofs: space.dim(),
        alpha,
        broken,
        norms,
        residual,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Eigenvalues (real or complex) with per-pair residuals for one mesh level.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub element: ElementKind,
    pub alpha: Option<f64>,
    pub method: String,
    pub values: Vec<Complex64>,
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    pub seconds: f64,
}

impl Spectrum {
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

fn method_name(m: EigMethod) -> String {
    serde_json::to_value(m).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Reduced stiffness and mass matrices of the bi-elastic eigenvalue problem.
pub struct BiElasticPencil {
    pub space: FemSpace,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub alpha: Option<f64>,
}

pub fn bielastic_pencil(spec: &ProblemSpec) -> Result<BiElasticPencil> {
    let ProblemKind::BiElasticEig { beta, .. } = &spec.kind else {
        return Err(Error::InvalidSpec("not a bi-elastic eigenvalue problem".into()));
    };
    let (mesh, space) = build_space(spec)?;
    let alpha = resolve_alpha(spec, coefficient_min(&mesh, beta)?)?;
    let stiffness = fourth_order(&space, beta, spec.lame, alpha)?;
    let mass = space.reduce(&assemble(&mesh, 2, &FormKind::Mass(Coefficient::constant(1.0)), spec.lame)?.matrix);
    Ok(BiElasticPencil { space, stiffness, mass, alpha })
}

pub fn solve_bielastic_eigs(spec: &ProblemSpec) -> Result<Spectrum> {
    let ProblemKind::BiElasticEig { k, .. } = &spec.kind else {
        return Err(Error::InvalidSpec("solve_bielastic_eigs needs an eigenvalue problem".into()));
    };
    let start = Instant::now();
    let BiElasticPencil { space, stiffness, mass, alpha } = bielastic_pencil(spec)?;
    let mesh = space.mesh.clone();
    let eig = eig_sym_gen(&stiffness, &mass, *k, &EigOptions::default())?;
    Ok(Spectrum {
        level: spec.level,
        h: mesh.h,
        dofs: space.dim(),
        element: spec.element,
        alpha,
        method: method_name(eig.method),
        values: eig.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        residuals: eig.residuals,
        vectors: eig.vectors,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Cached blocks of A_tau = D + tau F + tau^2 M and the right-hand form B.
#[derive(Debug, Clone)]
pub struct TepOperator {
    pub space: FemSpace,
    pub d: CsrMatrix,
    /// F0 + F0^T
    pub f: CsrMatrix,
    /// M1 + M2
    pub m: CsrMatrix,
    pub b: CsrMatrix,
    /// Mass(rho0 rho1 / (rho1 - rho0)), the tau^2 block of the quadratic pencil.
    pub m_quad: CsrMatrix,
    pub case: DensityCase,
    pub alpha: Option<f64>,
    pub opts: EigOptions,
}

impl TepOperator {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let ProblemKind::Tep { rho0, rho1, .. } = &spec.kind else {
            return Err(Error::InvalidSpec("transmission operator needs a tep problem".into()));
        };
        let (mesh, space) = build_space(spec)?;
        let pts = quadrature_points(&mesh, MASS_DEGREE)?;
        let diff: Vec<f64> = pts.iter().map(|&p| rho1.eval(p) - rho0.eval(p)).collect();
        let pos = diff.iter().all(|d| *d > 0.0);
        let neg = diff.iter().all(|d| *d < 0.0);
        let case = match (spec.density, pos, neg) {
            (DensityCase::Auto, true, _) | (DensityCase::Forward, true, _) => DensityCase::Forward,
            (DensityCase::Auto, _, true) | (DensityCase::Swapped, _, true) => DensityCase::Swapped,
            _ => {
                return Err(Error::InvalidSpec(
                    "densities intersect or do not match the requested ordering".into(),
                ))
            }
        };
        for (name, r) in [("rho0", rho0), ("rho1", rho1)] {
            let lo = r.min_over(pts.iter().copied());
            if !(lo > 0.0) {
                return Err(Error::InvalidSpec(format!("{name} must be positive, minimum {lo}")));
            }
        }
        // The swapped case is the forward case with the media exchanged.
        let (r0, r1) = match case {
            DensityCase::Swapped => (rho1, rho0),
            _ => (rho0, rho1),
        };
        let jump = r1.sub(r0);
        let w = Coefficient::constant(1.0).div(&jump);
        let rho_min = w.min_over(pts.iter().copied());
        let alpha = resolve_alpha(spec, rho_min)?;
        let lame = spec.lame;
        let d = fourth_order(&space, &w, lame, alpha)?;
        let f0 = space.reduce(&assemble(&mesh, 2, &FormKind::MixedDivSigmaMass(r0.div(&jump)), lame)?.matrix);
        let f = f0.add(&f0.transpose());
        let m1 = assemble(&mesh, 2, &FormKind::Mass(r0.mul(r0).div(&jump)), lame)?.matrix;
        let m2 = assemble(&mesh, 2, &FormKind::Mass(r0.clone()), lame)?.matrix;
        let m = space.reduce(&m1.add(&m2));
        let b = space.reduce(&assemble(&mesh, 2, &FormKind::ElasticEnergy, lame)?.matrix);
        let m_quad = space.reduce(&assemble(&mesh, 2, &FormKind::Mass(r0.mul(r1).div(&jump)), lame)?.matrix);
        Ok(TepOperator { space, d, f, m, b, m_quad, case, alpha, opts: EigOptions::default() })
    }

    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn a_tau(&self, tau: f64) -> CsrMatrix {
        self.d.lincomb(1.0, &self.f, tau).lincomb(1.0, &self.m, tau * tau)
    }

    /// The `k` smallest eigenvalues of A_tau x = lambda B x.
    pub fn lambda_of_tau(&self, tau: f64, k: usize) -> Result<Vec<f64>> {
        Ok(self.eigs_at(tau, k)?.0)
    }

    fn eigs_at(&self, tau: f64, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if tau < 0.0 {
            return Err(Error::InvalidSpec(format!("tau must be nonnegative, got {tau}")));
        }
        let e = eig_sym_gen(&self.a_tau(tau), &self.b, k, &self.opts).map_err(|e| match e {
            Error::Factorization(msg) => Error::Convergence(format!("A_tau lost coercivity at tau = {tau}: {msg}")),
            other => other,
        })?;
        if e.values[0] <= 0.0 {
            return Err(Error::Convergence(format!("A_tau is not coercive at tau = {tau}")));
        }
        Ok((e.values, e.vectors))
    }

    /// Pencil (K, C, M) with (K + tau C + tau^2 M) x = 0 equivalent to A_tau x = tau B x.
    pub fn quadratic_pencil(&self) -> (CsrMatrix, CsrMatrix, CsrMatrix) {
        (self.d.clone(), self.f.lincomb(1.0, &self.b, -1.0), self.m_quad.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Explicit interval; defaults to [0.25, 1.5 lambda_k(0)].
    pub range: Option<(f64, f64)>,
    pub points: usize,
    pub branches: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams { range: None, points: 60, branches: 12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub branch: usize,
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    /// Adjacent branches nearly touch at an endpoint.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauScan {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub taus: Vec<f64>,
    /// f_j(tau) = lambda_j(tau) - tau, indexed [point][branch].
    pub samples: Vec<Vec<f64>>,
    pub brackets: Vec<Bracket>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TepRoot {
    pub tau: f64,
    pub branch: usize,
    /// |lambda_j(tau) - tau| / (1 + tau) on independent re-evaluation, nearest branch.
    pub certificate: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

pub const SECANT_TOL: f64 = 1e-10;
pub const CERTIFY_TOL: f64 = 1e-9;
const SECANT_MAX_ITER: usize = 50;

pub fn scan_tau(op: &TepOperator, params: &ScanParams) -> Result<TauScan> {
    let k = params.branches.min(op.dim());
    let (lo, hi) = match params.range {
        Some(r) => r,
        None => (0.25, 1.5 * op.lambda_of_tau(0.0, k)?[k - 1]),
    };
    if !(lo >= 0.0 && hi > lo) || params.points < 2 {
        return Err(Error::InvalidSpec(format!("bad tau range {lo}:{hi}")));
    }
    let step = (hi - lo) / (params.points - 1) as f64;
    let taus: Vec<f64> = (0..params.points).map(|i| lo + step * i as f64).collect();
    let samples: Vec<Vec<f64>> = taus
        .par_iter()
        .map(|&t| op.lambda_of_tau(t, k).map(|l| l.iter().map(|v| v - t).collect()))
        .collect::<Result<_>>()?;
    let mut brackets = Vec::new();
    for i in 0..taus.len() - 1 {
        for j in 0..k {
            let (a, b) = (samples[i][j], samples[i + 1][j]);
            if a == 0.0 || a.signum() != b.signum() {
                let near = |s: &[f64]| {
                    (j > 0 && (s[j] - s[j - 1]).abs() < 1e-8) || (j + 1 < k && (s[j + 1] - s[j]).abs() < 1e-8)
                };
                brackets.push(Bracket {
                    branch: j,
                    lo: taus[i],
                    hi: taus[i + 1],
                    f_lo: a,
                    f_hi: b,
                    ambiguous: near(&samples[i]) || near(&samples[i + 1]),
                });
            }
        }
    }
    Ok(TauScan { lo, hi, step, taus, samples, brackets })
}

/// Secant iteration on one branch with an Illinois-type bracketing safeguard.
fn refine_bracket(op: &TepOperator, k: usize, br: &Bracket) -> Result<(f64, usize)> {
    let j = br.branch;
    // One extra branch keeps the ordering of branch j meaningful.
    let k = (j + 2).min(k);
    let f = |t: f64| -> Result<f64> { Ok(op.lambda_of_tau(t, k)?[j] - t) };
    let (mut a, mut b) = (br.lo, br.hi);
    let (mut fa, mut fb) = (br.f_lo, br.f_hi);
    if fa == 0.0 {
        return Ok((a, 0));
    }
    let mut side = 0i8;
    for it in 1..=SECANT_MAX_ITER {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc.abs() <= SECANT_TOL * (1.0 + c.abs()) || (b - a).abs() <= 1e-14 * (1.0 + c.abs()) {
            return Ok((c, it));
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok((0.5 * (a + b), SECANT_MAX_ITER))
}

/// Real transmission eigenvalues as roots of lambda_j(tau) - tau.
pub fn find_teps_secant(op: &TepOperator, params: &ScanParams) -> Result<(Vec<TepRoot>, TauScan)> {
    let scan = scan_tau(op, params)?;
    let k = params.branches.min(op.dim());
    let refined: Vec<(f64, usize, usize)> = scan
        .brackets
        .par_iter()
        .map(|br| refine_bracket(op, k, br).map(|(t, it)| (t, br.branch, it)))
        .collect::<Result<_>>()?;
    let mut roots: Vec<TepRoot> = Vec::new();
    let mut sorted = refined;
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (tau, branch, iterations) in sorted {
        if roots.iter().any(|r| (r.tau - tau).abs() <= 1e-8 * (1.0 + tau.abs())) {
            continue;
        }
        let (vals, vecs) = op.eigs_at(tau, k)?;
        let (nearest, gap) = vals
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (v - tau).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((branch, f64::INFINITY));
        roots.push(TepRoot {
            tau,
            branch: nearest,
            certificate: gap / (1.0 + tau.abs()),
            iterations,
            vector: vecs[nearest].clone(),
        });
    }
    Ok((roots, scan))
}

pub fn find_teps_quadratic(op: &TepOperator, k: usize) -> Result<crate::eigen::QuadEig> {
    let (kk, c, m) = op.quadratic_pencil();
    eig_quadratic(&kk, &c, &m, k, &op.opts)
}

/// Runs either transmission path for one level.
pub fn solve_tep(spec: &ProblemSpec, params: &ScanParams) -> Result<Spectrum> {
    let ProblemKind::Tep { k, method, .. } = &spec.kind else {
        return Err(Error::InvalidSpec("solve_tep needs a tep problem".into()));
    };
    let start = Instant::now();
    let op = TepOperator::new(spec)?;
    let h = op.space.mesh.h;
    let (values, residuals, vectors, method_tag) = match method {
        TepMethod::Secant => {
            let params = ScanParams { branches: params.branches.max(*k), ..*params };
            let (roots, _) = find_teps_secant(&op, &params)?;
            let roots: Vec<_> = roots.into_iter().take(*k).collect();
            (
                roots.iter().map(|r| Complex64::new(r.tau, 0.0)).collect(),
                roots.iter().map(|r| r.certificate).collect(),
                roots.into_iter().map(|r| r.vector).collect(),
                "secant".to_string(),
            )
        }
        TepMethod::Quadratic => {
            let q = find_teps_quadratic(&op, *k)?;
            (q.values, q.residuals, Vec::new(), format!("quadratic-{}", method_name(q.method)))
        }
    };
    Ok(Spectrum {
        level: spec.level,
        h,
        dofs: op.dim(),
        element: spec.element,
        alpha: op.alpha,
        method: method_tag,
        values,
        residuals,
        vectors,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mesh for a spec without building a space.
pub fn spec_mesh(spec: &ProblemSpec) -> Result<TriMesh> {
    generate_domain(spec.domain, spec.level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tep_spec(level: usize, rho0: f64, rho1: f64) -> ProblemSpec {
        ProblemSpec::new(
            Domain::UnitSquare,
            level,
            Lame::new(0.25, 0.25),
            ProblemKind::Tep { rho0: rho0.into(), rho1: rho1.into(), k: 4, method: TepMethod::Secant },
        )
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let spec = ProblemSpec::new(
            Domain::UnitSquare,
            1,
            Lame::new(0.25, 0.0625),
            ProblemKind::Source { beta: 1.0.into(), f: [0.0.into(), 0.0.into()], exact: None },
        );
        let s = solve_source(&spec).unwrap();
        assert!(s.broken.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lambda_at_zero_is_positive() {
        let op = TepOperator::new(&tep_spec(1, 0.05, 3.0)).unwrap();
        let l = op.lambda_of_tau(0.0, 3).unwrap();
        assert!(l[0] > 0.0 && l[0] <= l[1] && l[1] <= l[2]);
    }

    #[test]
    fn swapped_densities_give_identical_roots() {
        let params = ScanParams { range: Some((0.25, 30.0)), points: 30, branches: 3 };
        let fwd = TepOperator::new(&tep_spec(1, 0.05, 3.0)).unwrap();
        let swp = TepOperator::new(&tep_spec(1, 3.0, 0.05)).unwrap();
        assert_eq!(swp.case, DensityCase::Swapped);
        let (a, _) = find_teps_secant(&fwd, &params).unwrap();
        let (b, _) = find_teps_secant(&swp, &params).unwrap();
        assert!(!a.is_empty() && a.len() == b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.tau - y.tau).abs() <= 1e-9 * x.tau);
        }
    }

    #[test]
    fn intersecting_densities_rejected() {
        let mut spec = tep_spec(0, 1.0, 1.0);
        if let ProblemKind::Tep { rho1, .. } = &mut spec.kind {
            *rho1 = Coefficient::affine(0.5, 1.0, 0.0);
        }
        assert!(matches!(TepOperator::new(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn alpha_with_b3_rejected() {
        let spec = tep_spec(0, 0.05, 3.0).with_alpha(Some(0.1));
        assert!(spec.validate().is_err());
    }
}
