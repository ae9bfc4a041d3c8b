//! Assembly of the discrete bilinear forms.
//!
//! Entry `(row, col)` of every operator is the form evaluated at
//! (trial = basis `col`, test = basis `row`), so `form(u, ψ) = ψᵀ A u`.
//! Tensor bases are the symmetric unit tensors, whose off-diagonal members
//! carry weight 2 in the Frobenius product.

use rayon::prelude::*;

use super::sparse::SparseOperator;
use super::{Basis, Mesh, VectorField};
use crate::potentials::{dphi, MaterialParams};
use crate::tensors::{bracket, sym_skew, SymTensor3, Tensor3};

type Triplets = Vec<(usize, usize, f64)>;

/// Operators that do not depend on the state.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    /// ∫ u·ψ (velocity mass, without ρ).
    pub mass_v: SparseOperator,
    /// ∫ E:Ψ (consistent tensor mass).
    pub mass_e: SparseOperator,
    /// ∫ S(u):D(ψ).
    pub visc: SparseOperator,
    /// ∫ ∇u:∇ψ (vector Laplacian, used for the Korn quotient).
    pub stiffness: SparseOperator,
    /// ∫ D(u):Ψ, tensor rows × velocity columns.
    pub grad_sym: SparseOperator,
    /// ∫ (div u) q, scalar rows × velocity columns.
    pub div: SparseOperator,
    /// γ ∫ ∇[Dφ(E)] ⋮ ∇Ψ.
    pub diffusion: SparseOperator,
    /// ∫ ∇a·∇b for scalar Q1 functions.
    pub laplace: SparseOperator,
    /// ∫ a b for scalar Q1 functions.
    pub mass_scalar: SparseOperator,
}

pub(crate) fn unit_tensor(c: usize) -> SymTensor3 {
    let mut a = [0.0; 6];
    a[c] = 1.0;
    SymTensor3::from_array(a)
}

/// ∇(N_a e_d) as a 3×3 tensor.
pub(crate) fn velocity_basis_grad(b: &Basis, a: usize, d: usize) -> Tensor3 {
    let mut m = [[0.0; 3]; 3];
    m[d][0] = b.dx[a];
    m[d][1] = b.dy[a];
    Tensor3::new(m)
}

fn element_loop<F>(mesh: &Mesh, qn: usize, f: F) -> Triplets
where
    F: Fn(&[usize; 4], &[super::QuadPoint], usize, &mut Triplets) + Sync,
{
    let q = mesh.quadrature(qn);
    let chunks: Vec<Triplets> = (0..mesh.elements())
        .into_par_iter()
        .map(|e| {
            let nodes = mesh.element_nodes(e);
            let mut t = Vec::new();
            f(&nodes, &q, e, &mut t);
            t
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Assemble the state-independent operators.
pub fn assemble(mesh: &Mesh, p: &MaterialParams) -> OperatorSet {
    let n = mesh.nodes();
    let mass_scalar = SparseOperator::from_triplets(
        n,
        n,
        &element_loop(mesh, 2, |nodes, q, _, t| {
            for qp in q {
                for a in 0..4 {
                    for b in 0..4 {
                        t.push((nodes[a], nodes[b], qp.weight * qp.basis.n[a] * qp.basis.n[b]));
                    }
                }
            }
        }),
        true,
    );
    let laplace = SparseOperator::from_triplets(
        n,
        n,
        &element_loop(mesh, 2, |nodes, q, _, t| {
            for qp in q {
                let b = &qp.basis;
                for a in 0..4 {
                    for c in 0..4 {
                        t.push((nodes[a], nodes[c], qp.weight * (b.dx[a] * b.dx[c] + b.dy[a] * b.dy[c])));
                    }
                }
            }
        }),
        true,
    );
    let expand = |s: &SparseOperator, comps: usize, weights: &dyn Fn(usize) -> f64| {
        let mut t = Vec::with_capacity(s.mat.nnz() * comps);
        for (i, j, v) in s.mat.triplet_iter() {
            for c in 0..comps {
                t.push((comps * i + c, comps * j + c, v * weights(c)));
            }
        }
        SparseOperator::from_triplets(comps * n, comps * n, &t, true)
    };
    let mass_v = expand(&mass_scalar, 2, &|_| 1.0);
    let stiffness = expand(&laplace, 2, &|_| 1.0);
    let mass_e = expand(&mass_scalar, 6, &|c| crate::tensors::COMPONENT_WEIGHTS[c]);

    let lam = p.mu2 - 2.0 * p.mu1 / 3.0;
    let visc = SparseOperator::from_triplets(
        2 * n,
        2 * n,
        &element_loop(mesh, 2, |nodes, q, _, t| {
            for qp in q {
                let b = &qp.basis;
                for a in 0..4 {
                    for da in 0..2 {
                        let ga = velocity_basis_grad(b, a, da);
                        let (dga, _) = sym_skew(ga);
                        for c in 0..4 {
                            for dc in 0..2 {
                                let gc = velocity_basis_grad(b, c, dc);
                                let (dgc, _) = sym_skew(gc);
                                let v = 2.0 * p.mu1 * dgc.ddot(dga) + lam * gc.trace() * ga.trace();
                                t.push((2 * nodes[a] + da, 2 * nodes[c] + dc, qp.weight * v));
                            }
                        }
                    }
                }
            }
        }),
        true,
    );
    let grad_sym = SparseOperator::from_triplets(
        6 * n,
        2 * n,
        &element_loop(mesh, 2, |nodes, q, _, t| {
            for qp in q {
                let b = &qp.basis;
                for c in 0..4 {
                    for dc in 0..2 {
                        let (d, _) = sym_skew(velocity_basis_grad(b, c, dc));
                        for a in 0..4 {
                            for k in 0..6 {
                                let v = b.n[a] * d.ddot(unit_tensor(k));
                                if v != 0.0 {
                                    t.push((6 * nodes[a] + k, 2 * nodes[c] + dc, qp.weight * v));
                                }
                            }
                        }
                    }
                }
            }
        }),
        false,
    );
    let div = SparseOperator::from_triplets(
        n,
        2 * n,
        &element_loop(mesh, 2, |nodes, q, _, t| {
            for qp in q {
                let b = &qp.basis;
                for a in 0..4 {
                    for c in 0..4 {
                        t.push((nodes[a], 2 * nodes[c], qp.weight * b.n[a] * b.dx[c]));
                        t.push((nodes[a], 2 * nodes[c] + 1, qp.weight * b.n[a] * b.dy[c]));
                    }
                }
            }
        }),
        false,
    );
    let mut t = Vec::with_capacity(laplace.mat.nnz() * 12);
    for (i, j, l) in laplace.mat.triplet_iter() {
        for cp in 0..6 {
            let ke = dphi(unit_tensor(cp), p);
            for c in 0..6 {
                let v = ke.ddot(unit_tensor(c));
                if v != 0.0 {
                    t.push((6 * i + c, 6 * j + cp, p.gamma * l * v));
                }
            }
        }
    }
    let diffusion = SparseOperator::from_triplets(6 * n, 6 * n, &t, true);
    OperatorSet { mass_v, mass_e, visc, stiffness, grad_sym, div, diffusion, laplace, mass_scalar }
}

/// Matrix of c(v; u, ψ) = ∫ ρ/2 (div v)(u·ψ) + ρ u·(∇ψ v).
pub fn convection_operator(mesh: &Mesh, p: &MaterialParams, v: &VectorField) -> SparseOperator {
    let n = mesh.nodes();
    let rho = p.rho;
    let t = element_loop(mesh, 2, |nodes, q, _, t| {
        for qp in q {
            let b = &qp.basis;
            let vp = v.eval(nodes, b);
            let div = vp.div();
            for a in 0..4 {
                let adv = vp.v[0] * b.dx[a] + vp.v[1] * b.dy[a];
                for c in 0..4 {
                    let val = qp.weight * (0.5 * rho * div * b.n[c] * b.n[a] + rho * b.n[c] * adv);
                    for d in 0..2 {
                        t.push((2 * nodes[a] + d, 2 * nodes[c] + d, val));
                    }
                }
            }
        }
    });
    SparseOperator::from_triplets(2 * n, 2 * n, &t, false)
}

/// Matrix of the transport form ∫ (div v) E:Ψ + (v·∇Ψ):E.
pub fn transport_operator(mesh: &Mesh, v: &VectorField) -> SparseOperator {
    let n = mesh.nodes();
    let t = element_loop(mesh, 2, |nodes, q, _, t| {
        for qp in q {
            let b = &qp.basis;
            let vp = v.eval(nodes, b);
            let div = vp.div();
            for a in 0..4 {
                let adv = vp.v[0] * b.dx[a] + vp.v[1] * b.dy[a];
                for c in 0..4 {
                    let val = qp.weight * (div * b.n[c] * b.n[a] + b.n[c] * adv);
                    for k in 0..6 {
                        t.push((6 * nodes[a] + k, 6 * nodes[c] + k, val * crate::tensors::COMPONENT_WEIGHTS[k]));
                    }
                }
            }
        }
    });
    SparseOperator::from_triplets(6 * n, 6 * n, &t, false)
}

/// Matrix of the spin form ∫ (E W − W E):Ψ with W the skew part of ∇v.
pub fn rotation_operator(mesh: &Mesh, v: &VectorField) -> SparseOperator {
    let n = mesh.nodes();
    let t = element_loop(mesh, 2, |nodes, q, _, t| {
        for qp in q {
            let b = &qp.basis;
            let (_, w) = sym_skew(v.eval(nodes, b).grad);
            for cp in 0..6 {
                let r = bracket(unit_tensor(cp), w);
                for k in 0..6 {
                    let rk = r.ddot(unit_tensor(k));
                    if rk == 0.0 {
                        continue;
                    }
                    for a in 0..4 {
                        for c in 0..4 {
                            t.push((6 * nodes[a] + k, 6 * nodes[c] + cp, qp.weight * b.n[a] * b.n[c] * rk));
                        }
                    }
                }
            }
        }
    });
    SparseOperator::from_triplets(6 * n, 6 * n, &t, false)
}
