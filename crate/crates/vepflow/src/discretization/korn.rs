//! Discrete Korn constant by restarted Lanczos on the inverse operator.

use nalgebra::{DMatrix, SymmetricEigen};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use super::assembly::assemble;
use super::sparse::SparseOperator;
use super::Mesh;
use crate::error::{Error, Result};
use crate::potentials::MaterialParams;

/// Safety factor applied to the smallest generalized eigenvalue.
pub const KORN_SAFETY: f64 = 0.99;

const MAX_ITER: usize = 10_000;
const REL_TOL: f64 = 1e-8;
const KRYLOV_DIM: usize = 100;

fn restrict(op: &SparseOperator, map: &[Option<usize>], n: usize) -> CscMatrix<f64> {
    let mut coo = CooMatrix::new(n, n);
    for (i, j, v) in op.mat.triplet_iter() {
        if let (Some(a), Some(b)) = (map[i], map[j]) {
            coo.push(a, b, *v);
        }
    }
    CscMatrix::from(&coo)
}

/// Smallest λ with S_visc x = λ L x on the constrained velocity space.
///
/// Lanczos on S⁻¹L in the S inner product, restarted from the Ritz vector.
/// The smallest eigenvalues cluster near μ₁ on fine Dirichlet meshes, which
/// stalls single-vector inverse iteration.
pub fn korn_eigenvalue(mesh: &Mesh, p: &MaterialParams) -> Result<f64> {
    if p.mu1 <= 0.0 {
        return Err(Error::Config("Korn constant needs mu1 > 0".into()));
    }
    let ops = assemble(mesh, p);
    let fixed = mesh.fixed_dofs();
    let mut map = vec![None; fixed.len()];
    let mut nfree = 0;
    for (i, f) in fixed.iter().enumerate() {
        if !f {
            map[i] = Some(nfree);
            nfree += 1;
        }
    }
    if nfree == 0 {
        return Err(Error::Config("admissible velocity space is trivial".into()));
    }
    let s = restrict(&ops.visc, &map, nfree);
    let l = restrict(&ops.stiffness, &map, nfree);
    let chol = CscCholesky::factor(&s).map_err(|e| Error::Convergence(format!("viscous operator not definite: {e:?}")))?;
    let mut x = DMatrix::from_fn(nfree, 1, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
    let mut theta = 0.0;
    let mut applied = 0;
    while applied < MAX_ITER {
        let sx = &s * &x;
        let nx = x.dot(&sx).sqrt();
        let mut q = vec![&x / nx];
        let mut sq = vec![sx / nx];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        for j in 0..KRYLOV_DIM.min(nfree) {
            applied += 1;
            let lq = &l * &q[j];
            let mut w = chol.solve(&lq);
            alpha.push(q[j].dot(&lq));
            w -= &q[j] * alpha[j];
            if j > 0 {
                w -= &q[j - 1] * beta[j - 1];
            }
            for _ in 0..2 {
                for (qi, sqi) in q.iter().zip(&sq) {
                    w -= qi * sqi.dot(&w);
                }
            }
            let sw = &s * &w;
            let b = w.dot(&sw).max(0.0).sqrt();
            let k = alpha.len();
            let t = DMatrix::from_fn(k, k, |a, c| match a.abs_diff(c) {
                0 => alpha[a],
                1 => beta[a.min(c)],
                _ => 0.0,
            });
            let eig = SymmetricEigen::new(t);
            let top = eig.eigenvalues.imax();
            theta = eig.eigenvalues[top];
            let y = eig.eigenvectors.column(top).into_owned();
            let done = b * y[k - 1].abs() <= REL_TOL * theta || b <= f64::EPSILON * theta || k == nfree;
            if done || j + 1 == KRYLOV_DIM || applied >= MAX_ITER {
                if done {
                    return Ok(1.0 / theta);
                }
                x = q.iter().zip(y.iter()).fold(DMatrix::zeros(nfree, 1), |acc, (qi, yi)| acc + qi * *yi);
                break;
            }
            beta.push(b);
            q.push(w / b);
            sq.push(sw / b);
        }
    }
    Err(Error::Convergence(format!("Korn iteration did not converge; last Rayleigh quotient {:e}", 1.0 / theta)))
}

/// Korn constant μ used by the regularity weights.
pub fn korn_constant(mesh: &Mesh, p: &MaterialParams) -> Result<f64> {
    Ok(KORN_SAFETY * korn_eigenvalue(mesh, p)?)
}
