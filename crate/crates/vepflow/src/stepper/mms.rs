//! Manufactured Kelvin–Voigt solution on the unit square.
//!
//! v = a(t) (sin πx sin πy, sin πx sin 2πy), 𝔼 = b(t) cos πx cos πy C with a
//! fixed in-plane tensor C. The body force and strain source are derived by
//! hand from the strong form of the regularized system with 𝒫 = 0.

use std::f64::consts::PI;

use crate::discretization::Mesh;
use crate::functionals::{Forcing, State};
use crate::potentials::{dphi, phi, MaterialParams};
use crate::tensors::{bracket, sym_skew, SymTensor3, Tensor3};

const AMP_V: f64 = 0.5;
const AMP_E: f64 = 0.2;
const OMEGA: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug)]
pub struct MmsSolution {
    pub params: MaterialParams,
    pub amplitude: f64,
    pub steady: bool,
    pub c: SymTensor3,
}

impl MmsSolution {
    pub fn new(params: MaterialParams, amplitude: f64, steady: bool) -> Self {
        MmsSolution { params, amplitude, steady, c: SymTensor3::new(1.0, -0.5, 0.0, 0.75, 0.0, 0.0) }
    }

    /// (a, a').
    fn a(&self, t: f64) -> (f64, f64) {
        let k = self.amplitude * AMP_V;
        if self.steady {
            (k, 0.0)
        } else {
            (k * (OMEGA * t).cos(), -k * OMEGA * (OMEGA * t).sin())
        }
    }

    /// (b, b').
    fn b(&self, t: f64) -> (f64, f64) {
        let k = self.amplitude * AMP_E;
        if self.steady {
            (k, 0.0)
        } else {
            (k * (OMEGA * t).cos(), -k * OMEGA * (OMEGA * t).sin())
        }
    }

    pub fn velocity(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let (a, _) = self.a(t);
        let sx = (PI * x).sin();
        [a * sx * (PI * y).sin(), a * sx * (2.0 * PI * y).sin()]
    }

    pub fn strain_field(&self, t: f64, x: f64, y: f64) -> SymTensor3 {
        let (b, _) = self.b(t);
        self.c * (b * (PI * x).cos() * (PI * y).cos())
    }

    /// Velocity, its gradient (grad[i][j] = ∂_j v_i), divergence gradient and Laplacian.
    fn kinematics(&self, t: f64, x: f64, y: f64) -> ([f64; 2], Tensor3, [f64; 2], [f64; 2]) {
        let (a, _) = self.a(t);
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let (s2y, c2y) = (2.0 * PI * y).sin_cos();
        let v = [a * sx * sy, a * sx * s2y];
        let mut g = Tensor3::ZERO;
        g.m[0][0] = a * PI * cx * sy;
        g.m[0][1] = a * PI * sx * cy;
        g.m[1][0] = a * PI * cx * s2y;
        g.m[1][1] = 2.0 * a * PI * sx * c2y;
        let grad_div = [
            a * PI * (-PI * sx * sy + 2.0 * PI * cx * c2y),
            a * PI * (PI * cx * cy - 4.0 * PI * sx * s2y),
        ];
        let lap = [-2.0 * PI * PI * v[0], -5.0 * PI * PI * v[1]];
        (v, g, grad_div, lap)
    }
}

impl Forcing for MmsSolution {
    fn body(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let p = &self.params;
        let (_, da) = self.a(t);
        let (b, _) = self.b(t);
        let (v, g, grad_div, lap) = self.kinematics(t, x, y);
        let div = g.m[0][0] + g.m[1][1];
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let s = b * cx * cy;
        let ds = [-b * PI * sx * cy, -b * PI * cx * sy];
        let kc = dphi(self.c, p).to_matrix();
        let phi_c = phi(self.c, p);
        let unit = [sx * sy, sx * (2.0 * PI * y).sin()];
        let mut f = [0.0; 2];
        for i in 0..2 {
            let conv = v[0] * g.m[i][0] + v[1] * g.m[i][1];
            let div_ke = ds[0] * kc[i][0] + ds[1] * kc[i][1];
            let grad_phi = 2.0 * s * phi_c * ds[i];
            f[i] = p.rho * da * unit[i] + p.rho * conv + 0.5 * p.rho * div * v[i]
                - div_ke
                - grad_phi
                - p.mu1 * lap[i]
                - (p.mu1 / 3.0 + p.mu2) * grad_div[i];
        }
        f
    }

    fn strain(&self, t: f64, x: f64, y: f64) -> SymTensor3 {
        let p = &self.params;
        let (b, db) = self.b(t);
        let (v, g, _, _) = self.kinematics(t, x, y);
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let s = b * cx * cy;
        let ds = [-b * PI * sx * cy, -b * PI * cx * sy];
        let (d, w) = sym_skew(g);
        let e = self.c * s;
        let lap_ke = dphi(self.c, p) * (-2.0 * PI * PI * s);
        self.c * (db * cx * cy + v[0] * ds[0] + v[1] * ds[1]) + bracket(e, w) - d - lap_ke * p.gamma
    }

    fn has_strain_source(&self) -> bool {
        true
    }
}

/// L² errors (velocity, strain) of a discrete state against the exact
/// solution at time t, with 4×4 Gauss.
pub fn l2_errors(mesh: &Mesh, s: &State, sol: &MmsSolution, t: f64) -> (f64, f64) {
    let q = mesh.quadrature(4);
    let (mut ev, mut ee) = (0.0, 0.0);
    for el in 0..mesh.elements() {
        let nodes = mesh.element_nodes(el);
        let [x0, y0] = mesh.element_origin(el);
        for g in &q {
            let x = x0 + g.s * mesh.hx;
            let y = y0 + g.t * mesh.hy;
            let vh = s.v.eval(&nodes, &g.basis).v;
            let eh = s.e.eval(&nodes, &g.basis).value;
            let v = sol.velocity(t, x, y);
            ev += g.weight * ((vh[0] - v[0]).powi(2) + (vh[1] - v[1]).powi(2));
            ee += g.weight * (eh - sol.strain_field(t, x, y)).norm_sq();
        }
    }
    (ev.sqrt(), ee.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::DissipationModel;

    fn params() -> MaterialParams {
        MaterialParams { mu1: 0.1, mu2: 0.2, bulk: 1.3, shear: 0.7, gamma: 1e-2, dissipation: DissipationModel::Zero, ..Default::default() }
    }

    /// Central differences of the closed-form fields reproduce the hand-derived forcing.
    #[test]
    fn forcing_matches_finite_differences() {
        let sol = MmsSolution::new(params(), 1.0, false);
        let p = sol.params;
        let h = 1e-4;
        let (t, x, y) = (0.3, 0.37, 0.61);
        let vel = |t: f64, x: f64, y: f64| sol.velocity(t, x, y);
        let dv = |i: usize, d: usize, t: f64, x: f64, y: f64| {
            let (a, b) = if d == 0 { (vel(t, x + h, y), vel(t, x - h, y)) } else { (vel(t, x, y + h), vel(t, x, y - h)) };
            (a[i] - b[i]) / (2.0 * h)
        };
        let v = vel(t, x, y);
        let mut grad = Tensor3::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                grad.m[i][j] = dv(i, j, t, x, y);
            }
        }
        let div = grad.m[0][0] + grad.m[1][1];
        // σ = Dφ(𝔼) + φ(𝔼)I + S(D v); div σ by nested differences.
        let sigma = |x: f64, y: f64| {
            let e = sol.strain_field(t, x, y);
            let mut g = Tensor3::ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    g.m[i][j] = dv(i, j, t, x, y);
                }
            }
            let (d, _) = sym_skew(g);
            (dphi(e, &p) + SymTensor3::IDENTITY * phi(e, &p) + crate::potentials::newtonian_stress(d, &p)).to_matrix()
        };
        let f = sol.body(t, x, y);
        for i in 0..2 {
            let dt = (vel(t + h, x, y)[i] - vel(t - h, x, y)[i]) / (2.0 * h);
            let div_sigma = (sigma(x + h, y)[i][0] - sigma(x - h, y)[i][0]) / (2.0 * h)
                + (sigma(x, y + h)[i][1] - sigma(x, y - h)[i][1]) / (2.0 * h);
            let expected = p.rho * dt + p.rho * (v[0] * grad.m[i][0] + v[1] * grad.m[i][1]) + 0.5 * p.rho * div * v[i] - div_sigma;
            assert!((f[i] - expected).abs() < 1e-5 * (1.0 + expected.abs()), "{i}: {} vs {expected}", f[i]);
        }
        // Strain source: ∂t𝔼 + v·∇𝔼 + 𝔼W − W𝔼 − D(v) − γΔDφ(𝔼).
        let e = |t: f64, x: f64, y: f64| sol.strain_field(t, x, y);
        let (d, w) = sym_skew(grad);
        let ew = Tensor3::from(e(t, x, y)).matmul(w);
        let we = w.matmul(Tensor3::from(e(t, x, y)));
        let ke = |x: f64, y: f64| dphi(e(t, x, y), &p);
        let h2 = 1e-3;
        let lap = (ke(x + h2, y) + ke(x - h2, y) + ke(x, y + h2) + ke(x, y - h2) - ke(x, y) * 4.0) * (1.0 / (h2 * h2));
        let dt = (e(t + h, x, y) - e(t - h, x, y)) * (1.0 / (2.0 * h));
        let adv = (e(t, x + h, y) - e(t, x - h, y)) * (v[0] / (2.0 * h)) + (e(t, x, y + h) - e(t, x, y - h)) * (v[1] / (2.0 * h));
        let expected = dt + adv + SymTensor3::from_matrix(&ew.plus(we.scale(-1.0)).m) - d - lap * p.gamma;
        let g = Forcing::strain(&sol, t, x, y);
        assert!((g - expected).max_abs() < 1e-5, "{g:?} vs {expected:?}");
    }

    #[test]
    fn steady_has_no_time_derivative() {
        let sol = MmsSolution::new(params(), 1.0, true);
        assert_eq!(sol.velocity(0.0, 0.3, 0.4), sol.velocity(0.9, 0.3, 0.4));
        assert_eq!(sol.body(0.0, 0.3, 0.4), sol.body(0.7, 0.3, 0.4));
    }

    #[test]
    fn satisfies_boundary_conditions() {
        let sol = MmsSolution::new(params(), 1.0, false);
        for s in [0.0, 0.25, 0.5, 1.0] {
            for (x, y) in [(0.0, s), (1.0, s), (s, 0.0), (s, 1.0)] {
                let v = sol.velocity(0.2, x, y);
                assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
            }
        }
    }
}
