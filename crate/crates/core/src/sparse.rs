use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;

/// Compressed sparse row matrix with sorted column indices and no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
        }
    }

    /// Duplicates are summed in input order, which keeps the result bit-reproducible.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..nrows {
            let (lo, hi) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| cols[k]);
            for &k in &order {
                if indices.len() > indptr[i] && *indices.last().unwrap() == cols[k] {
                    *data.last_mut().unwrap() += vals[k];
                } else {
                    indices.push(cols[k]);
                    data.push(vals[k]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows, ncols, indptr, indices, data }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// y = A^T x
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t: Vec<(usize, usize, f64)> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Sparse product with a dense accumulator per row.
    pub fn matmul(&self, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0.0; b.ncols];
        let mut mark = vec![usize::MAX; b.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(i) {
                for (j, v) in b.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * v;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                indices.push(j);
                data.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: b.ncols, indptr, indices, data }
    }

    /// P^T A P
    pub fn congruence(&self, p: &CsrMatrix) -> CsrMatrix {
        p.transpose().matmul(&self.matmul(p))
    }

    /// alpha A + beta B on the union pattern.
    pub fn lincomb(&self, alpha: f64, b: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (b.nrows, b.ncols));
        let mut indptr = vec![0];
        let mut indices = Vec::with_capacity(self.nnz().max(b.nnz()));
        let mut data = Vec::with_capacity(self.nnz().max(b.nnz()));
        for i in 0..self.nrows {
            let mut x = self.row(i).peekable();
            let mut y = b.row(i).peekable();
            loop {
                match (x.peek().copied(), y.peek().copied()) {
                    (Some((ja, va)), Some((jb, vb))) => {
                        if ja == jb {
                            indices.push(ja);
                            data.push(alpha * va + beta * vb);
                            x.next();
                            y.next();
                        } else if ja < jb {
                            indices.push(ja);
                            data.push(alpha * va);
                            x.next();
                        } else {
                            indices.push(jb);
                            data.push(beta * vb);
                            y.next();
                        }
                    }
                    (Some((ja, va)), None) => {
                        indices.push(ja);
                        data.push(alpha * va);
                        x.next();
                    }
                    (None, Some((jb, vb))) => {
                        indices.push(jb);
                        data.push(beta * vb);
                        y.next();
                    }
                    (None, None) => break,
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, data }
    }

    pub fn add(&self, b: &CsrMatrix) -> CsrMatrix {
        self.lincomb(1.0, b, 1.0)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut s = vec![0.0; self.ncols];
        for (j, v) in self.indices.iter().zip(&self.data) {
            s[*j] += v.abs();
        }
        s.into_iter().fold(0.0, f64::max)
    }

    pub fn asymmetry(&self) -> f64 {
        self.lincomb(1.0, &self.transpose(), -1.0).max_abs()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.nrows == self.ncols && self.asymmetry() <= rel_tol * self.max_abs()
    }

    /// Block diagonal matrix with `copies` copies of `self`.
    pub fn block_diag(&self, copies: usize) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz() * copies);
        for c in 0..copies {
            for (i, j, v) in self.triplets() {
                t.push((c * self.nrows + i, c * self.ncols + j, v));
            }
        }
        CsrMatrix::from_triplets(self.nrows * copies, self.ncols * copies, &t)
    }

    /// Submatrix of the given columns (all rows).
    pub fn select_columns(&self, cols: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k;
        }
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .filter(|&(_, j, _)| map[j] != usize::MAX)
            .map(|(i, j, v)| (i, map[j], v))
            .collect();
        CsrMatrix::from_triplets(self.nrows, cols.len(), &t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                a[(i, j)] += v;
            }
        }
        a
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<Triplet<usize, usize, f64>> =
            self.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t).expect("valid sparse pattern")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_sparse(n: usize, m: usize, seed: u64) -> CsrMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if next() < 0.3 {
                    t.push((i, j, next() - 0.5));
                }
            }
        }
        CsrMatrix::from_triplets(n, m, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, -1.0), (0, 0, 4.0)]);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    proptest! {
        #[test]
        fn products_match_dense(seed in 0u64..1000) {
            let a = random_sparse(7, 5, seed);
            let b = random_sparse(5, 6, seed + 1);
            let c = a.matmul(&b).to_dense();
            let d = a.to_dense() * b.to_dense();
            prop_assert!((c - d).abs().max() < 1e-14);
            let k = random_sparse(7, 7, seed + 2);
            let p = random_sparse(7, 4, seed + 3);
            let e = k.congruence(&p).to_dense();
            let f = p.to_dense().transpose() * k.to_dense() * p.to_dense();
            prop_assert!((e - f).abs().max() < 1e-13);
            let x: Vec<f64> = (0..5).map(|i| i as f64 - 2.0).collect();
            let y = a.mul_vec(&x);
            let z = a.to_dense() * nalgebra::DVector::from_vec(x);
            for (u, v) in y.iter().zip(z.iter()) {
                prop_assert!((u - v).abs() < 1e-14);
            }
            let s = k.lincomb(2.0, &k.transpose(), -0.5).to_dense();
            let r = k.to_dense() * 2.0 - k.to_dense().transpose() * 0.5;
            prop_assert!((s - r).abs().max() < 1e-14);
        }
    }
}
