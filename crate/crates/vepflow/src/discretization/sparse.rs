//! Compressed sparse operators and a Jacobi-preconditioned CG solver.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// CSR matrix with dimension metadata and a symmetry flag.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pub mat: CsrMatrix<f64>,
    pub symmetric: bool,
}

impl SparseOperator {
    /// Sum duplicate triplets into a CSR matrix.
    pub fn from_triplets(rows: usize, cols: usize, t: &[(usize, usize, f64)], symmetric: bool) -> Self {
        let mut coo = CooMatrix::new(rows, cols);
        for &(i, j, v) in t {
            coo.push(i, j, v);
        }
        SparseOperator { mat: CsrMatrix::from(&coo), symmetric }
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols());
        assert_eq!(y.len(), self.rows());
        let off = self.mat.row_offsets();
        let cols = self.mat.col_indices();
        let vals = self.mat.values();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in off[i]..off[i + 1] {
                s += vals[k] * x[cols[k]];
            }
            *yi = s;
        }
    }

    /// yᵀ A x.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.apply(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows().min(self.cols())];
        for (i, j, v) in self.mat.triplet_iter() {
            if i == j && i < d.len() {
                d[i] += *v;
            }
        }
        d
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows()];
        for (i, _, v) in self.mat.triplet_iter() {
            s[i] += *v;
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.values().iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// max |A − Aᵀ| entrywise.
    pub fn max_asymmetry(&self) -> f64 {
        let t = self.mat.transpose();
        let mut worst = 0.0f64;
        let diff = &self.mat - &t;
        for v in diff.values() {
            worst = worst.max(v.abs());
        }
        worst
    }

    /// Replace rows and columns of masked unknowns by the identity.
    pub fn eliminate(&self, fixed: &[bool]) -> SparseOperator {
        assert_eq!(self.rows(), self.cols());
        assert_eq!(fixed.len(), self.rows());
        let mut t = Vec::with_capacity(self.mat.nnz());
        for (i, j, v) in self.mat.triplet_iter() {
            if !fixed[i] && !fixed[j] {
                t.push((i, j, *v));
            }
        }
        for (i, f) in fixed.iter().enumerate() {
            if *f {
                t.push((i, i, 1.0));
            }
        }
        SparseOperator::from_triplets(self.rows(), self.cols(), &t, self.symmetric)
    }

    /// α A + β B for operators of equal shape.
    pub fn combine(&self, alpha: f64, other: &SparseOperator, beta: f64) -> SparseOperator {
        let a = &self.mat * alpha;
        let b = &other.mat * beta;
        SparseOperator { mat: &a + &b, symmetric: self.symmetric && other.symmetric }
    }
}

/// Result of a CG solve.
#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD `a`; `x` is the initial guess.
pub fn cg(a: &SparseOperator, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = b.len();
    let dinv: Vec<f64> = a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome { iterations: 0, residual: 0.0 });
    }
    let target = rel_tol * bnorm;
    let mut r = a.apply(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm(&r);
    for it in 0..max_iter {
        if res <= target {
            return Ok(CgOutcome { iterations: it, residual: res / bnorm });
        }
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Convergence(format!("CG breakdown: pᵀAp = {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm(&r);
    }
    if res <= target {
        return Ok(CgOutcome { iterations: max_iter, residual: res / bnorm });
    }
    Err(Error::Convergence(format!("CG did not reach {rel_tol:e} in {max_iter} iterations (residual {:e})", res / bnorm)))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
