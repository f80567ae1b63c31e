//! Sparse factorizations and eigensolvers for symmetric pencils and quadratic problems.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

/// Sparse Cholesky factor with one step of iterative refinement per solve.
pub struct SpdSolver {
    matrix: CsrMatrix,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdSolver").field("n", &self.matrix.nrows()).finish()
    }
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Factorization(format!("matrix is {}x{}", a.nrows(), a.ncols())));
        }
        let llt = a
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(SpdSolver { matrix: a.clone(), llt })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Single forward and backward substitution without refinement.
    pub fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.raw_solve(b);
        let ax = self.matrix.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = self.raw_solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        x
    }
}

/// Solves `A x = b` for symmetric positive definite `A`; returns the solution and the relative residual.
pub fn solve_sym(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let x = SpdSolver::new(a)?.solve(b);
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let scale = norm2(b).max(f64::MIN_POSITIVE);
    Ok((x, norm2(&r) / scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigOptions {
    /// Backward error tolerance for accepted eigenpairs.
    pub tol: f64,
    pub max_basis: usize,
    pub block: usize,
    /// Problems up to this size are solved densely.
    pub dense_cutoff: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { tol: 1e-10, max_basis: 500, block: 2, dense_cutoff: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigMethod {
    Dense,
    BlockKrylov,
    DenseCompanion,
    Arnoldi,
}

/// Eigenpairs of a symmetric definite pencil, ascending.
#[derive(Debug, Clone, Serialize)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// B-normalized, first significant component positive.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub method: EigMethod,
}

/// Eigenpairs of a quadratic problem, ascending by real part.
#[derive(Debug, Clone, Serialize)]
pub struct QuadEig {
    pub values: Vec<Complex64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub method: EigMethod,
}

fn sym_backward_error(a: &CsrMatrix, b: &CsrMatrix, norms: (f64, f64), lambda: f64, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let bx = b.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - lambda * q).collect();
    norm2(&r) / ((norms.0 + lambda.abs() * norms.1) * norm2(x))
}

fn normalize_sym(b: &CsrMatrix, x: &mut [f64]) {
    let s = dot(x, &b.mul_vec(x)).sqrt();
    let big = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let first = x.iter().find(|v| v.abs() > 1e-8 * big).copied().unwrap_or(1.0);
    let f = first.signum() / s;
    x.iter_mut().for_each(|v| *v *= f);
}

/// Deterministic pseudo-random start vector.
fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (seed as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Dense solve of `A x = lambda B x` for the `k` smallest eigenvalues.
pub fn eig_sym_dense(a: &CsrMatrix, b: &CsrMatrix, k: usize) -> Result<SymEig> {
    let n = a.nrows();
    let chol = nalgebra::Cholesky::new(b.to_dense())
        .ok_or_else(|| Error::Factorization("right-hand matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(&a.to_dense())
        .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let norms = (a.norm1(), b.norm1());
    let lt = l.transpose();
    let mut out = SymEig { values: vec![], vectors: vec![], residuals: vec![], method: EigMethod::Dense };
    for &i in order.iter().take(k.min(n)) {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
        let mut x: Vec<f64> = x.iter().copied().collect();
        normalize_sym(b, &mut x);
        let lambda = eig.eigenvalues[i];
        out.residuals.push(sym_backward_error(a, b, norms, lambda, &x));
        out.values.push(lambda);
        out.vectors.push(x);
    }
    Ok(out)
}

/// The `k` smallest eigenpairs of `A x = lambda B x` with `A`, `B` symmetric positive definite.
pub fn eig_sym_gen(a: &CsrMatrix, b: &CsrMatrix, k: usize, opts: &EigOptions) -> Result<SymEig> {
    let n = a.nrows();
    if b.nrows() != n || a.ncols() != n || b.ncols() != n {
        return Err(Error::InvalidSpec("pencil matrices have mismatched shapes".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidSpec(format!("cannot request {k} eigenpairs of a {n}-dimensional problem")));
    }
    if n <= opts.dense_cutoff {
        return eig_sym_dense(a, b, k);
    }
    let solver = SpdSolver::new(a)?;
    let norms = (a.norm1(), b.norm1());
    let bs = opts.block.max(1);
    let cap = opts.max_basis.min(n);

    // Shift-invert on A^{-1} B, which is self-adjoint in the B inner product.
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut bv: Vec<Vec<f64>> = Vec::new();
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut fresh = 0usize;

    let orthonormalize = |w: &mut Vec<f64>, v: &[Vec<f64>], bv: &[Vec<f64>], coeffs: &mut Vec<f64>| -> f64 {
        let before = dot(w, &b.mul_vec(w)).sqrt();
        for _ in 0..2 {
            for (i, (vi, bvi)) in v.iter().zip(bv).enumerate() {
                let c = dot(bvi, w);
                coeffs[i] += c;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= c * vj);
            }
        }
        let after = dot(w, &b.mul_vec(w)).sqrt();
        if after <= 1e-10 * before.max(f64::MIN_POSITIVE) {
            0.0
        } else {
            w.iter_mut().for_each(|x| *x /= after);
            after
        }
    };

    let mut push_fresh = |v: &mut Vec<Vec<f64>>, bv: &mut Vec<Vec<f64>>| {
        loop {
            let mut w = start_vector(n, fresh);
            fresh += 1;
            let mut scratch = vec![0.0; v.len()];
            if orthonormalize(&mut w, v, bv, &mut scratch) > 0.0 {
                bv.push(b.mul_vec(&w));
                v.push(w);
                return;
            }
        }
    };

    for _ in 0..bs.min(n) {
        push_fresh(&mut v, &mut bv);
    }
    let mut processed = 0usize;
    let mut next_check = (2 * k + 10).max(4 * bs);
    loop {
        // Expand the basis by one block.
        let end = (processed + bs).min(v.len());
        for j in processed..end {
            let mut w = solver.raw_solve(&bv[j]);
            let mut coeffs = vec![0.0; v.len() + 1];
            if v.len() < cap {
                let nrm = orthonormalize(&mut w, &v, &bv, &mut coeffs);
                if nrm > 0.0 {
                    coeffs[v.len()] = nrm;
                    bv.push(b.mul_vec(&w));
                    v.push(w);
                } else {
                    push_fresh(&mut v, &mut bv);
                }
            } else {
                for (i, bvi) in bv.iter().enumerate() {
                    coeffs[i] = dot(bvi, &w);
                }
            }
            h.push(coeffs);
        }
        processed = end;
        let exhausted = processed == v.len();
        if processed < next_check.min(cap) && !exhausted {
            continue;
        }
        next_check = processed + (processed / 2).max(2 * bs);

        let p = processed;
        let hm = DMatrix::from_fn(p, p, |i, j| {
            let a_ij = h[j].get(i).copied().unwrap_or(0.0);
            let a_ji = h[i].get(j).copied().unwrap_or(0.0);
            0.5 * (a_ij + a_ji)
        });
        let eig = hm.symmetric_eigen();
        let mut order: Vec<usize> = (0..p).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        if order.len() >= k {
            let mut out = SymEig { values: vec![], vectors: vec![], residuals: vec![], method: EigMethod::BlockKrylov };
            for &i in order.iter().take(k) {
                let lambda = 1.0 / eig.eigenvalues[i];
                let mut x = vec![0.0; n];
                for (c, vc) in v.iter().take(p).enumerate() {
                    let y = eig.eigenvectors[(c, i)];
                    x.iter_mut().zip(vc).for_each(|(xi, vi)| *xi += y * vi);
                }
                normalize_sym(b, &mut x);
                out.residuals.push(sym_backward_error(a, b, norms, lambda, &x));
                out.values.push(lambda);
                out.vectors.push(x);
            }
            if out.residuals.iter().all(|r| *r <= opts.tol) {
                return Ok(out);
            }
            if exhausted || p >= cap {
                let worst = out.residuals.iter().fold(0.0f64, |m, r| m.max(*r));
                return Err(Error::Convergence(format!(
                    "block Krylov basis of size {p} left a backward error of {worst:.2e}"
                )));
            }
        } else if exhausted || p >= cap {
            return Err(Error::Convergence(format!("only {} Ritz values after {p} steps", order.len())));
        }
    }
}

fn complex_backward_error(
    k: &CsrMatrix,
    c: &CsrMatrix,
    m: &CsrMatrix,
    norms: [f64; 3],
    tau: Complex64,
    x: &[Complex64],
) -> f64 {
    let re: Vec<f64> = x.iter().map(|z| z.re).collect();
    let im: Vec<f64> = x.iter().map(|z| z.im).collect();
    let apply = |a: &CsrMatrix| -> Vec<Complex64> {
        a.mul_vec(&re).into_iter().zip(a.mul_vec(&im)).map(|(r, i)| Complex64::new(r, i)).collect()
    };
    let (kx, cx, mx) = (apply(k), apply(c), apply(m));
    let t2 = tau * tau;
    let r: f64 = (0..x.len()).map(|i| (kx[i] + tau * cx[i] + t2 * mx[i]).norm_sqr()).sum::<f64>().sqrt();
    let xn: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    r / ((norms[0] + tau.norm() * norms[1] + tau.norm_sqr() * norms[2]) * xn)
}

/// Drops roundoff imaginary parts of real eigenvalues.
fn clean_real(z: Complex64) -> Complex64 {
    if z.im.abs() <= 1e-12 * z.norm() {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

fn normalize_complex(x: &mut [Complex64]) {
    let nrm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let big = x.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(Complex64::new(1.0, 0.0));
    let phase = big.conj() / (big.norm() * nrm);
    x.iter_mut().for_each(|z| *z *= phase);
}

/// Ascending real part; conjugate pairs stay adjacent with the positive imaginary part first.
fn sort_quadratic(values: &mut [(Complex64, Vec<Complex64>, f64)]) {
    values.sort_by(|a, b| {
        let (za, zb) = (a.0, b.0);
        (za.re * 1e8)
            .round()
            .total_cmp(&(zb.re * 1e8).round())
            .then(za.im.abs().total_cmp(&zb.im.abs()))
            .then(zb.im.total_cmp(&za.im))
    });
}

/// Takes `nev` candidates with positive real part from a list ordered by increasing modulus,
/// completing a trailing conjugate pair. Returns the picks and the index of the last one used.
fn pick_positive(cands: &[(Complex64, Vec<Complex64>, f64)], nev: usize) -> (Vec<usize>, Option<usize>) {
    let mut picked: Vec<usize> = (0..cands.len()).filter(|&i| cands[i].0.re > 0.0).take(nev).collect();
    if let Some(&last) = picked.last() {
        let z = cands[last].0;
        if z.im.abs() > 1e-10 * z.norm() {
            let conj = z.conj();
            let has = picked.iter().any(|&i| (cands[i].0 - conj).norm() <= 1e-8 * z.norm());
            if !has {
                if let Some(j) = (last + 1..cands.len()).find(|&j| (cands[j].0 - conj).norm() <= 1e-6 * z.norm()) {
                    picked.push(j);
                }
            }
        }
    }
    let last = picked.iter().copied().max();
    (picked, last)
}

/// Dense linearization of `(tau^2 M + tau C + K) x = 0`.
pub fn eig_quadratic_dense(k: &CsrMatrix, c: &CsrMatrix, m: &CsrMatrix, nev: usize) -> Result<QuadEig> {
    let n = k.nrows();
    let chol = nalgebra::Cholesky::new(m.to_dense())
        .ok_or_else(|| Error::Factorization("mass matrix is not positive definite".into()))?;
    let mic = chol.solve(&c.to_dense());
    let mik = chol.solve(&k.to_dense());
    let comp = Mat::<f64>::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => -mic[(i, j)],
        (true, false) => -mik[(i, j - n)],
        (false, true) => f64::from(i - n == j),
        (false, false) => 0.0,
    });
    let eig = comp.eigen().map_err(|e| Error::Convergence(format!("{e:?}")))?;
    let norms = [k.norm1(), c.norm1(), m.norm1()];
    let s = eig.S();
    let u = eig.U();
    let mut cands: Vec<(Complex64, Vec<Complex64>, f64)> = (0..2 * n)
        .map(|j| {
            let tau = clean_real(Complex64::new(s[j].re, s[j].im));
            let mut x: Vec<Complex64> = (n..2 * n).map(|i| Complex64::new(u[(i, j)].re, u[(i, j)].im)).collect();
            normalize_complex(&mut x);
            let r = complex_backward_error(k, c, m, norms, tau, &x);
            (tau, x, r)
        })
        .collect();
    cands.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()).then(b.0.im.total_cmp(&a.0.im)));
    let (idx, _) = pick_positive(&cands, nev);
    Ok(unzip_quadratic(&cands, &idx, EigMethod::DenseCompanion))
}

fn unzip_quadratic(cands: &[(Complex64, Vec<Complex64>, f64)], idx: &[usize], method: EigMethod) -> QuadEig {
    let mut picked: Vec<_> = idx.iter().map(|&i| cands[i].clone()).collect();
    sort_quadratic(&mut picked);
    let mut out = QuadEig { values: vec![], vectors: vec![], residuals: vec![], method };
    for (t, x, r) in picked {
        out.values.push(t);
        out.vectors.push(x);
        out.residuals.push(r);
    }
    out
}

/// Eigenvalues of `(tau^2 M + tau C + K) x = 0` with positive real part and smallest modulus.
///
/// `K` must be symmetric positive definite. Large problems use shift-invert Arnoldi at zero on
/// the first companion linearization.
pub fn eig_quadratic(k: &CsrMatrix, c: &CsrMatrix, m: &CsrMatrix, nev: usize, opts: &EigOptions) -> Result<QuadEig> {
    let n = k.nrows();
    if nev == 0 || nev > n {
        return Err(Error::InvalidSpec(format!("cannot request {nev} eigenvalues of a {n}-dimensional problem")));
    }
    if 2 * n <= 2 * opts.dense_cutoff {
        return eig_quadratic_dense(k, c, m, nev);
    }
    let solver = SpdSolver::new(k)?;
    let norms = [k.norm1(), c.norm1(), m.norm1()];
    let dim = 2 * n;
    let cap = opts.max_basis.min(dim);
    let op = |x: &[f64]| -> Vec<f64> {
        let (x1, x2) = x.split_at(n);
        let mx = m.mul_vec(x1);
        let cx = c.mul_vec(x2);
        let rhs: Vec<f64> = mx.iter().zip(&cx).map(|(a, b)| a + b).collect();
        let z2 = solver.solve(&rhs);
        let mut z = x2.to_vec();
        z.extend(z2.into_iter().map(|v| -v));
        z
    };

    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut s0 = start_vector(dim, 0);
    let nrm = norm2(&s0);
    s0.iter_mut().for_each(|x| *x /= nrm);
    v.push(s0);
    let mut next_check = (4 * nev + 20).min(cap);
    let mut fresh = 1usize;
    loop {
        let j = h.len();
        let mut w = op(&v[j]);
        let mut coeffs = vec![0.0; j + 2];
        let before = norm2(&w);
        for _ in 0..2 {
            for (i, vi) in v.iter().enumerate() {
                let cf = dot(vi, &w);
                coeffs[i] += cf;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= cf * b);
            }
        }
        let mut after = norm2(&w);
        if after <= 1e-12 * before {
            // Invariant subspace found; continue from a new direction.
            w = start_vector(dim, fresh);
            fresh += 1;
            for _ in 0..2 {
                for vi in &v {
                    let cf = dot(vi, &w);
                    w.iter_mut().zip(vi).for_each(|(a, b)| *a -= cf * b);
                }
            }
            after = norm2(&w);
            coeffs[j + 1] = 0.0;
        } else {
            coeffs[j + 1] = after;
        }
        w.iter_mut().for_each(|x| *x /= after);
        h.push(coeffs);
        v.push(w);
        let p = h.len();
        if p < next_check && p < cap {
            continue;
        }
        next_check = p + (p / 2).max(10);

        let hm = Mat::<f64>::from_fn(p, p, |i, j| h[j].get(i).copied().unwrap_or(0.0));
        let eig = hm.eigen().map_err(|e| Error::Convergence(format!("{e:?}")))?;
        let (s, u) = (eig.S(), eig.U());
        let mut cands: Vec<(Complex64, Vec<Complex64>, f64)> = Vec::new();
        let mut idx: Vec<usize> = (0..p).filter(|&i| Complex64::new(s[i].re, s[i].im).norm() > 0.0).collect();
        idx.sort_by(|&a, &b| {
            let (za, zb) = (Complex64::new(s[a].re, s[a].im), Complex64::new(s[b].re, s[b].im));
            zb.norm().total_cmp(&za.norm()).then(zb.im.total_cmp(&za.im))
        });
        let mut positive = 0;
        for &i in &idx {
            let theta = Complex64::new(s[i].re, s[i].im);
            let tau = clean_real(theta.inv());
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            for (col, vc) in v.iter().take(p).enumerate() {
                let y = Complex64::new(u[(col, i)].re, u[(col, i)].im);
                x.iter_mut().zip(&vc[n..]).for_each(|(xi, vi)| *xi += y * vi);
            }
            normalize_complex(&mut x);
            let r = complex_backward_error(k, c, m, norms, tau, &x);
            cands.push((tau, x, r));
            if tau.re > 0.0 {
                positive += 1;
            }
            if positive > nev {
                break;
            }
        }
        let (picked, last) = pick_positive(&cands, nev);
        let converged = last.is_some_and(|l| cands[..=l].iter().all(|c| c.2 <= opts.tol));
        if picked.len() >= nev && converged {
            return Ok(unzip_quadratic(&cands, &picked, EigMethod::Arnoldi));
        }
        if p >= cap {
            let worst = picked.iter().fold(0.0f64, |a, &i| a.max(cands[i].2));
            return Err(Error::Convergence(format!("Arnoldi basis of size {p} left a backward error of {worst:.2e}")));
        }
    }
}

/// Smallest eigenvalue of the Gram matrix N^T N.
pub fn smallest_gram_eigenvalue(n: &CsrMatrix) -> Result<f64> {
    let g = n.transpose().matmul(n);
    let id = CsrMatrix::identity(g.nrows());
    let opts = EigOptions { tol: 1e-8, ..EigOptions::default() };
    Ok(eig_sym_gen(&g, &id, 1, &opts)?.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    fn exact_laplace(n: usize, j: usize) -> f64 {
        let th = (j as f64) * std::f64::consts::PI / (2.0 * (n as f64 + 1.0));
        4.0 * th.sin().powi(2)
    }

    #[test]
    fn spd_solve_residual() {
        let a = laplace_1d(500);
        let b: Vec<f64> = (0..500).map(|i| (i as f64).sin()).collect();
        let (_, r) = solve_sym(&a, &b).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn krylov_matches_closed_form_and_dense() {
        let n = 900;
        let a = laplace_1d(n);
        let diag: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0 + 0.5 * ((i % 7) as f64) / 7.0)).collect();
        let b = CsrMatrix::from_triplets(n, n, &diag);
        let id = CsrMatrix::identity(n);
        let e = eig_sym_gen(&a, &id, 6, &EigOptions::default()).unwrap();
        assert_eq!(e.method, EigMethod::BlockKrylov);
        for (j, v) in e.values.iter().enumerate() {
            assert!((v - exact_laplace(n, j + 1)).abs() < 1e-12, "{j}");
        }
        let sub = CsrMatrix::from_triplets(300, 300, &laplace_1d(300).triplets());
        let bsub = CsrMatrix::from_triplets(300, 300, &diag[..300]);
        let dense = eig_sym_dense(&sub, &bsub, 4).unwrap();
        let kry = eig_sym_gen(&sub, &bsub, 4, &EigOptions { dense_cutoff: 0, ..Default::default() }).unwrap();
        for (x, y) in dense.values.iter().zip(&kry.values) {
            assert!((x - y).abs() < 1e-10 * x.abs(), "{x} {y}");
        }
        let g = eig_sym_gen(&a, &b, 3, &EigOptions::default()).unwrap();
        for (lam, x) in g.values.iter().zip(&g.vectors) {
            assert!((dot(x, &b.mul_vec(x)) - 1.0).abs() < 1e-12);
            assert!(sym_backward_error(&a, &b, (a.norm1(), b.norm1()), *lam, x) < 1e-10);
        }
    }

    #[test]
    fn krylov_resolves_double_eigenvalue() {
        let n = 600;
        let one = laplace_1d(n / 2);
        let a = one.block_diag(2);
        let id = CsrMatrix::identity(n);
        let e = eig_sym_gen(&a, &id, 4, &EigOptions::default()).unwrap();
        assert!((e.values[0] - e.values[1]).abs() < 1e-12);
        assert!((e.values[2] - exact_laplace(n / 2, 2)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_dense_and_arnoldi_agree() {
        let n = 300;
        let k = laplace_1d(n).scaled((n * n) as f64);
        let m = CsrMatrix::identity(n);
        let c = CsrMatrix::identity(n).scaled(-3.0);
        let dense = eig_quadratic_dense(&k, &c, &m, 6).unwrap();
        let arn = eig_quadratic(&k, &c, &m, 6, &EigOptions { dense_cutoff: 0, ..Default::default() }).unwrap();
        assert_eq!(arn.method, EigMethod::Arnoldi);
        assert_eq!(dense.values.len(), arn.values.len());
        for (x, y) in dense.values.iter().zip(&arn.values) {
            assert!((x - y).norm() < 1e-8 * x.norm(), "{x} {y}");
        }
        // tau^2 - 3 tau + kappa = 0 per mode.
        for v in &arn.values {
            let kappa = v.re * v.re + v.im * v.im;
            assert!((v.re - 1.5).abs() < 1e-8 && kappa > 2.25);
        }
        assert!(arn.values[0].im > 0.0 && (arn.values[0] - arn.values[1].conj()).norm() < 1e-8);
    }

    #[test]
    fn gram_of_identity() {
        let n = CsrMatrix::identity(450).scaled(2.0);
        assert!((smallest_gram_eigenvalue(&n).unwrap() - 4.0).abs() < 1e-10);
    }
}
