//! Body forcing, its interval averages and the nodal load vectors.

use crate::discretization::{gauss_1d, Mesh, TensorField, VectorField};
use crate::tensors::SymTensor3;

/// Space-time forcing data.
///
/// `strain` is an optional source in the strain equation; the model has
/// none, but manufactured solutions need one.
pub trait Forcing: Send + Sync {
    fn body(&self, t: f64, x: f64, y: f64) -> [f64; 2];

    fn strain(&self, _t: f64, _x: f64, _y: f64) -> SymTensor3 {
        SymTensor3::ZERO
    }

    fn has_strain_source(&self) -> bool {
        false
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// f ≡ 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoForcing;

impl Forcing for NoForcing {
    fn body(&self, _t: f64, _x: f64, _y: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Composite Gauss rule on [t0, t1]: `SUB` panels of 5 points, exact for degree 9.
const SUB: usize = 3;

fn time_rule(t0: f64, t1: f64) -> Vec<(f64, f64)> {
    let (p, w) = gauss_1d(5);
    let h = (t1 - t0) / SUB as f64;
    let mut out = Vec::with_capacity(SUB * p.len());
    for k in 0..SUB {
        let a = t0 + k as f64 * h;
        for (s, wi) in p.iter().zip(&w) {
            out.push((a + s * h, wi / SUB as f64));
        }
    }
    out
}

/// Average of the body force over [t0, t1] at a point.
pub fn interval_average(f: &dyn Forcing, t0: f64, t1: f64, x: f64, y: f64) -> [f64; 2] {
    let mut a = [0.0, 0.0];
    for (t, w) in time_rule(t0, t1) {
        let v = f.body(t, x, y);
        a[0] += w * v[0];
        a[1] += w * v[1];
    }
    a
}

pub fn interval_average_strain(f: &dyn Forcing, t0: f64, t1: f64, x: f64, y: f64) -> SymTensor3 {
    let mut a = SymTensor3::ZERO;
    for (t, w) in time_rule(t0, t1) {
        a += f.strain(t, x, y) * w;
    }
    a
}

/// Nodal dual vectors of the averaged forcing on one time interval.
///
/// `f.get(i)` is ∫ fⁿ N_i and `g.get(i)` is ∫ gⁿ N_i, so the forcing
/// functional of a Q1 test pair is Σ f_i·ψ_i + Σ g_i:Ψ_i.
#[derive(Clone, Debug)]
pub struct Load {
    pub f: VectorField,
    pub g: Option<TensorField>,
    /// ‖fⁿ‖²_{L²}.
    pub f_l2_sq: f64,
    /// ∫_{t0}^{t1} ‖f(t)‖_{L²} dt with the same time rule.
    pub f_l2_time_integral: f64,
}

impl Load {
    pub fn zero(nodes: usize) -> Self {
        Load { f: VectorField::zeros(nodes), g: None, f_l2_sq: 0.0, f_l2_time_integral: 0.0 }
    }

    /// ℬ(ψ, Ψ) for Q1 fields.
    pub fn pair(&self, psi: &VectorField, cap: &TensorField) -> f64 {
        let mut s: f64 = self.f.data.iter().zip(&psi.data).map(|(a, b)| a * b).sum();
        if let Some(g) = &self.g {
            for i in 0..g.nodes() {
                s += g.get(i).ddot(cap.get(i));
            }
        }
        s
    }
}

/// Assemble the load of the interval [t0, t1] with 3×3 Gauss in space.
pub fn load_vector(mesh: &Mesh, forcing: &dyn Forcing, t0: f64, t1: f64) -> Load {
    let n = mesh.nodes();
    if forcing.is_zero() {
        return Load::zero(n);
    }
    let q = mesh.quadrature(3);
    let rule = time_rule(t0, t1);
    let mut f = VectorField::zeros(n);
    let mut g = forcing.has_strain_source().then(|| TensorField::zeros(n));
    let mut l2 = 0.0;
    let mut per_time = vec![0.0; rule.len()];
    for e in 0..mesh.elements() {
        let nodes = mesh.element_nodes(e);
        let [x0, y0] = mesh.element_origin(e);
        for qp in &q {
            let x = x0 + qp.s * mesh.hx;
            let y = y0 + qp.t * mesh.hy;
            let mut avg = [0.0, 0.0];
            for (k, (t, w)) in rule.iter().enumerate() {
                let v = forcing.body(*t, x, y);
                avg[0] += w * v[0];
                avg[1] += w * v[1];
                per_time[k] += qp.weight * (v[0] * v[0] + v[1] * v[1]);
            }
            l2 += qp.weight * (avg[0] * avg[0] + avg[1] * avg[1]);
            for a in 0..4 {
                let wn = qp.weight * qp.basis.n[a];
                f.data[2 * nodes[a]] += wn * avg[0];
                f.data[2 * nodes[a] + 1] += wn * avg[1];
            }
            if let Some(g) = g.as_mut() {
                let gs = interval_average_strain(forcing, t0, t1, x, y);
                for a in 0..4 {
                    let cur = g.get(nodes[a]);
                    g.set(nodes[a], cur + gs * (qp.weight * qp.basis.n[a]));
                }
            }
        }
    }
    mesh.constrain(&mut f);
    let tau = t1 - t0;
    let integral = rule.iter().zip(&per_time).map(|((_, w), s)| tau * w * s.sqrt()).sum();
    Load { f, g, f_l2_sq: l2, f_l2_time_integral: integral }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_mesh, BoundarySpec};

    struct Linear;
    impl Forcing for Linear {
        fn body(&self, t: f64, _x: f64, _y: f64) -> [f64; 2] {
            [t, 2.0]
        }
    }

    struct Wave;
    impl Forcing for Wave {
        fn body(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
            [(6.0 * t).sin() * x, (3.0 * t).cos() * y * y]
        }
    }

    #[test]
    fn averages() {
        let a = interval_average(&NoForcing, 0.0, 0.1, 0.3, 0.3);
        assert_eq!(a, [0.0, 0.0]);
        let tau = 0.05;
        let a = interval_average(&Linear, 0.0, tau, 0.5, 0.5);
        assert!((a[0] - tau / 2.0).abs() < 1e-16);
        assert!((a[1] - 2.0).abs() < 1e-15);
        let a = interval_average(&Wave, 0.2, 0.3, 1.0, 1.0);
        let exact = ((6.0f64 * 0.2).cos() - (6.0f64 * 0.3).cos()) / 6.0 / 0.1;
        assert!((a[0] - exact).abs() < 1e-13);
    }

    #[test]
    fn load_pairs_with_constant() {
        let m = build_mesh(4, 4, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap();
        let l = load_vector(&m, &Linear, 0.0, 0.2);
        // ∫ f·ψ for ψ = interior nodal indicator equals the load entry.
        let i = m.node_index(2, 2);
        let mut psi = VectorField::zeros(m.nodes());
        psi.set(i, [1.0, 0.0]);
        let v = l.pair(&psi, &TensorField::zeros(m.nodes()));
        assert!((v - 0.1 * m.lumped_mass()[i]).abs() < 1e-15);
    }

    #[test]
    fn jensen_direction() {
        let m = build_mesh(6, 6, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap();
        let tau = 0.1;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for n in 0..10 {
            let l = load_vector(&m, &Wave, n as f64 * tau, (n + 1) as f64 * tau);
            lhs += tau * l.f_l2_sq.sqrt();
            rhs += l.f_l2_time_integral;
        }
        assert!(lhs <= rhs + 1e-14);
        assert!(lhs > 0.5 * rhs);
    }
}
