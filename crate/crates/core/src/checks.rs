//! Discrete identities of the cubic space and the built-in self-test.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::assembly::{assemble, FormKind};
use crate::coefficient::Coefficient;
use crate::error::Result;
use crate::harness::{check_source_data, example, run_example, Overrides};
use crate::mesh::{generate_domain, Domain};
use crate::polybasis::Lame;
use crate::solvers::{graddiv_split_constant, TepMethod};
use crate::spaces::{ElementKind, FemSpace};
use crate::sparse::CsrMatrix;

/// Relative sizes of the identity defects, each scaled by the largest entry of the reduced
/// Hessian matrix, and the extreme eigenvalues of the bound matrices scaled likewise.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    pub dim: usize,
    /// Laplacian pair minus full Hessian.
    pub laplace_hessian: f64,
    /// Grad-div against curl-rot cross term.
    pub mixed: f64,
    /// Laplacian pair minus grad-div minus curl-rot.
    pub laplacian_split: f64,
    /// Bi-elastic minus mu^2 Laplacian minus ((lambda+2mu)^2 - mu^2) grad-div.
    pub norm_decomposition: f64,
    /// Smallest eigenvalue of bi-elastic minus mu^2 Laplacian.
    pub lower_bound_min: f64,
    /// Smallest eigenvalue of (lambda+2mu)^2 Laplacian minus bi-elastic.
    pub upper_bound_min: f64,
    /// Same with the (lambda+mu)^2 factor, negative when that bound fails.
    pub upper_bound_min_lambda_mu: f64,
    /// Smallest eigenvalue of the reduced elastic energy matrix.
    pub energy_min: f64,
}

fn min_eig(a: &CsrMatrix, scale: f64) -> f64 {
    let d = a.to_dense();
    let d = (&d + d.transpose()) * 0.5;
    SymmetricEigen::new(d).eigenvalues.min() / scale
}

/// Evaluates the identities on the vector cubic space. Dense eigenvalues, so keep the level small.
pub fn identity_report(domain: Domain, level: usize, lame: Lame) -> Result<IdentityReport> {
    let mesh = Arc::new(generate_domain(domain, level)?);
    let space = FemSpace::new(ElementKind::B3, mesh.clone(), 2)?;
    let one = Coefficient::constant(1.0);
    let reduced = |k: FormKind| -> Result<CsrMatrix> { Ok(space.reduce(&assemble(&mesh, 2, &k, lame)?.matrix)) };
    let hess = reduced(FormKind::HessianFull(one.clone()))?;
    let lap = reduced(FormKind::LaplacePair(one.clone()))?;
    let gd = reduced(FormKind::GradDiv(one.clone()))?;
    let cr = reduced(FormKind::CurlRot(one.clone()))?;
    let mix = reduced(FormKind::GradDivCurlRot(one.clone()))?;
    let bie = reduced(FormKind::BiElastic(one.clone()))?;
    let energy = reduced(FormKind::ElasticEnergy)?;
    let scale = hess.max_abs();
    let mu2 = lame.mu * lame.mu;
    let l2mu = (lame.lambda + 2.0 * lame.mu).powi(2);
    let lmu = (lame.lambda + lame.mu).powi(2);
    let split = lap.lincomb(1.0, &gd, -1.0).lincomb(1.0, &cr, -1.0);
    let decomposition = bie.lincomb(1.0, &lap, -mu2).lincomb(1.0, &gd, -graddiv_split_constant(lame));
    let bie_scale = bie.max_abs();
    Ok(IdentityReport {
        dim: space.dim(),
        laplace_hessian: lap.lincomb(1.0, &hess, -1.0).max_abs() / scale,
        mixed: mix.max_abs() / scale,
        laplacian_split: split.max_abs() / scale,
        norm_decomposition: decomposition.max_abs() / bie_scale,
        lower_bound_min: min_eig(&bie.lincomb(1.0, &lap, -mu2), bie_scale),
        upper_bound_min: min_eig(&lap.lincomb(l2mu, &bie, -1.0), bie_scale),
        upper_bound_min_lambda_mu: min_eig(&lap.lincomb(lmu, &bie, -1.0), bie_scale),
        energy_min: min_eig(&energy, energy.max_abs()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Fast checks run by `self-test`: stored example data, coarse-mesh table values,
/// the discrete identities and agreement of the two transmission paths.
pub fn self_test() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    // Deterministic pseudo-random points in the unit square, away from the boundary.
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        0.05 + 0.9 * (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let points: Vec<[f64; 2]> = (0..5).map(|_| [next(), next()]).collect();
    for id in [1, 2] {
        let def = example(id)?;
        let pts: Vec<[f64; 2]> = points
            .iter()
            .map(|&[x, y]| if def.domain == Domain::RightTriangle { [x * (1.0 - y), y] } else { [x, y] })
            .collect();
        let gap = check_source_data(&def, &pts)?;
        out.push(Check::new(&format!("example {id} load data"), gap < 1e-4, format!("max relative gap {gap:.2e}")));
    }

    for (id, target) in [(3, 25.35774), (4, 202.60084)] {
        let r = run_example(id, Some(&[1]), &Overrides::default())?;
        let v = r.eigen_rows[0].value_re;
        out.push(Check::new(
            &format!("example {id} level 1 lambda1"),
            rel(v, target) < 5e-4,
            format!("{v:.8} vs {target}"),
        ));
    }

    let id = identity_report(Domain::UnitSquare, 1, Lame::new(0.25, 1.0 / 16.0))?;
    let worst = id.laplace_hessian.max(id.mixed).max(id.laplacian_split).max(id.norm_decomposition);
    out.push(Check::new("discrete identities", worst < 1e-10, format!("max defect {worst:.2e}")));
    let bounds = id.lower_bound_min.min(id.upper_bound_min);
    out.push(Check::new("two-sided bound", bounds > -1e-9, format!("min eigenvalue {bounds:.2e}")));

    let lv = |m: TepMethod| -> Result<f64> {
        let ov = Overrides { method: Some(m), k: Some(2), ..Default::default() };
        Ok(run_example(6, Some(&[1]), &ov)?.eigen_rows[0].value_re)
    };
    let (s, q) = (lv(TepMethod::Secant)?, lv(TepMethod::Quadratic)?);
    out.push(Check::new("transmission paths agree", rel(s, q) < 1e-8, format!("secant {s:.10} quadratic {q:.10}")));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold_on_coarse_square() {
        let r = identity_report(Domain::UnitSquare, 0, Lame::new(0.25, 1.0 / 16.0)).unwrap();
        assert!(r.laplace_hessian < 1e-10, "{r:?}");
        assert!(r.mixed < 1e-10, "{r:?}");
        assert!(r.norm_decomposition < 1e-10, "{r:?}");
        assert!(r.lower_bound_min > -1e-9 && r.upper_bound_min > -1e-9, "{r:?}");
        assert!(r.energy_min > 0.0, "{r:?}");
    }
}
