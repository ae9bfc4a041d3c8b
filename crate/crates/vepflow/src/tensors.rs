//! Symmetric and general 3×3 tensors.
//!
//! Symmetric tensors store six components; the off-diagonal entries count
//! twice in the Frobenius product so that `A:B` equals the full 3×3 contraction.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{contract, Result};

/// Symmetric 3×3 tensor stored as (xx, yy, zz, xy, xz, yz).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

/// Weight of each stored component in the Frobenius product.
pub const COMPONENT_WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3 { xx: 0.0, yy: 0.0, zz: 0.0, xy: 0.0, xz: 0.0, yz: 0.0 };
    pub const IDENTITY: SymTensor3 = SymTensor3 { xx: 1.0, yy: 1.0, zz: 1.0, xy: 0.0, xz: 0.0, yz: 0.0 };

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        SymTensor3 { xx, yy, zz, xy, xz, yz }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor3::new(a, b, c, 0.0, 0.0, 0.0)
    }

    pub fn from_array(c: [f64; 6]) -> Self {
        SymTensor3::new(c[0], c[1], c[2], c[3], c[4], c[5])
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
    }

    /// Symmetric tensor from a matrix, averaging the off-diagonal pairs.
    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Self {
        SymTensor3::new(
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[1][2] + m[2][1]),
        )
    }

    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Frobenius product A:B.
    pub fn ddot(self, o: SymTensor3) -> f64 {
        self.xx * o.xx
            + self.yy * o.yy
            + self.zz * o.zz
            + 2.0 * (self.xy * o.xy + self.xz * o.xz + self.yz * o.yz)
    }

    pub fn norm_sq(self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// (tr A / 3) I.
    pub fn sph(self) -> SymTensor3 {
        SymTensor3::IDENTITY * (self.trace() / 3.0)
    }

    pub fn dev(self) -> SymTensor3 {
        let m = self.trace() / 3.0;
        SymTensor3 { xx: self.xx - m, yy: self.yy - m, zz: self.zz - m, ..self }
    }

    /// Largest absolute stored component.
    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0f64, |a, c| a.max(c.abs()))
    }

    /// A·v for a 3-vector.
    pub fn apply(self, v: [f64; 3]) -> [f64; 3] {
        [
            self.xx * v[0] + self.xy * v[1] + self.xz * v[2],
            self.xy * v[0] + self.yy * v[1] + self.yz * v[2],
            self.xz * v[0] + self.yz * v[1] + self.zz * v[2],
        ]
    }

    pub fn is_trace_free(self, rel: f64) -> bool {
        self.trace().abs() <= rel * self.norm().max(1.0)
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, o: SymTensor3) -> SymTensor3 {
        SymTensor3::new(
            self.xx + o.xx,
            self.yy + o.yy,
            self.zz + o.zz,
            self.xy + o.xy,
            self.xz + o.xz,
            self.yz + o.yz,
        )
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, o: SymTensor3) -> SymTensor3 {
        self + (-o)
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        self * -1.0
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(self, s: f64) -> SymTensor3 {
        SymTensor3::new(self.xx * s, self.yy * s, self.zz * s, self.xy * s, self.xz * s, self.yz * s)
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    fn mul(self, t: SymTensor3) -> SymTensor3 {
        t * self
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, o: SymTensor3) {
        *self = *self + o;
    }
}

impl SubAssign for SymTensor3 {
    fn sub_assign(&mut self, o: SymTensor3) {
        *self = *self - o;
    }
}

/// General 3×3 tensor, row-major: `m[i][j]` is entry (i, j).
///
/// Velocity gradients follow the convention `(∇v)_ij = ∂_j v_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor3 {
    pub m: [[f64; 3]; 3],
}

impl Tensor3 {
    pub const ZERO: Tensor3 = Tensor3 { m: [[0.0; 3]; 3] };

    pub fn new(m: [[f64; 3]; 3]) -> Self {
        Tensor3 { m }
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Tensor3 { m }
    }

    pub fn transpose(self) -> Tensor3 {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in self.m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                t[j][i] = *v;
            }
        }
        Tensor3 { m: t }
    }

    pub fn matmul(self, o: Tensor3) -> Tensor3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Tensor3 { m: r }
    }

    pub fn trace(self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn ddot(self, o: Tensor3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.m[i][j] * o.m[i][j];
            }
        }
        s
    }

    pub fn norm(self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.m.iter().flatten().fold(0.0f64, |a, c| a.max(c.abs()))
    }

    /// Whether `self` is skew-symmetric up to `tol · max(1, |self|)`.
    pub fn is_skew(self, tol: f64) -> bool {
        let s = tol * self.max_abs().max(1.0);
        (0..3).all(|i| (0..3).all(|j| (self.m[i][j] + self.m[j][i]).abs() <= s))
    }

    pub fn plus(self, o: Tensor3) -> Tensor3 {
        let mut r = self.m;
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] += o.m[i][j];
            }
        }
        Tensor3 { m: r }
    }

    pub fn scale(self, s: f64) -> Tensor3 {
        let mut r = self.m;
        r.iter_mut().flatten().for_each(|x| *x *= s);
        Tensor3 { m: r }
    }
}

impl From<SymTensor3> for Tensor3 {
    fn from(s: SymTensor3) -> Tensor3 {
        Tensor3 { m: s.to_matrix() }
    }
}

/// Spherical part, deviatoric part and trace of `a`.
pub fn decompose(a: SymTensor3) -> (SymTensor3, SymTensor3, f64) {
    (a.sph(), a.dev(), a.trace())
}

/// Symmetric part D = (G + Gᵀ)/2 and skew part W = (G − Gᵀ)/2.
pub fn sym_skew(g: Tensor3) -> (SymTensor3, Tensor3) {
    let d = SymTensor3::from_matrix(&g.m);
    let mut w = [[0.0; 3]; 3];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = 0.5 * (g.m[i][j] - g.m[j][i]);
        }
    }
    (d, Tensor3 { m: w })
}

/// E·W − W·E for symmetric E and skew W.
pub fn jaumann_bracket(e: SymTensor3, w: Tensor3) -> Result<SymTensor3> {
    if !w.is_skew(1e-12) {
        return Err(contract("jaumann_bracket: spin tensor is not skew-symmetric"));
    }
    Ok(bracket(e, w))
}

/// Unchecked E·W − W·E; the result is symmetric when W is skew.
pub(crate) fn bracket(e: SymTensor3, w: Tensor3) -> SymTensor3 {
    let ew = Tensor3::from(e).matmul(w);
    let c = ew.plus(ew.transpose());
    // For skew W, W·E = −(E·W)ᵀ, so E·W − W·E = E·W + (E·W)ᵀ.
    SymTensor3::new(c.m[0][0], c.m[1][1], c.m[2][2], c.m[0][1], c.m[0][2], c.m[1][2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym() -> impl Strategy<Value = SymTensor3> {
        prop::array::uniform6(-10.0f64..10.0).prop_map(SymTensor3::from_array)
    }

    fn gen() -> impl Strategy<Value = Tensor3> {
        prop::array::uniform3(prop::array::uniform3(-10.0f64..10.0)).prop_map(Tensor3::new)
    }

    #[test]
    fn decompose_identity_and_zero() {
        let (s, d, t) = decompose(SymTensor3::IDENTITY);
        assert_eq!(s, SymTensor3::IDENTITY);
        assert_eq!(d.max_abs(), 0.0);
        assert_eq!(t, 3.0);
        let (s, d, t) = decompose(SymTensor3::ZERO);
        assert_eq!((s, d, t), (SymTensor3::ZERO, SymTensor3::ZERO, 0.0));
    }

    #[test]
    fn decompose_uniaxial() {
        let a = SymTensor3::diag(1.0, 0.0, 0.0);
        let (s, d, t) = decompose(a);
        assert_eq!(t, 1.0);
        let third = 1.0 / 3.0;
        assert!((s - SymTensor3::diag(third, third, third)).max_abs() < 1e-16);
        assert!((d - SymTensor3::diag(2.0 * third, -third, -third)).max_abs() < 1e-15);
        assert!((s + d - a).max_abs() < 1e-16);
    }

    /// E·W − W·E by explicit matrix products.
    fn bracket_oracle(e: SymTensor3, w: Tensor3) -> [[f64; 3]; 3] {
        let em = e.to_matrix();
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    r[i][j] += em[i][k] * w.m[k][j] - w.m[i][k] * em[k][j];
                }
            }
        }
        r
    }

    #[test]
    fn bracket_trivial_cases() {
        let w = Tensor3::new([[0.0, 1.0, -2.0], [-1.0, 0.0, 3.0], [2.0, -3.0, 0.0]]);
        let e = SymTensor3::new(1.0, 2.0, 3.0, 0.5, -0.25, 0.75);
        assert_eq!(jaumann_bracket(e, Tensor3::ZERO).unwrap(), SymTensor3::ZERO);
        assert_eq!(jaumann_bracket(SymTensor3::IDENTITY, w).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn bracket_matches_matrix_product() {
        let e = SymTensor3::diag(1.0, 2.0, 0.0);
        let w = Tensor3::new([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let r = jaumann_bracket(e, w).unwrap();
        let o = bracket_oracle(e, w);
        assert_eq!(r.to_matrix(), o);
        // diag(1,2,0)·W − W·diag(1,2,0) has (x,y) entry 1 − 2 = −1.
        assert_eq!(r.xy, -1.0);
        assert!(r.trace().abs() < 1e-15);
    }

    #[test]
    fn bracket_rejects_non_skew() {
        let w = Tensor3::new([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(jaumann_bracket(SymTensor3::IDENTITY, w).is_err());
    }

    #[test]
    fn sym_skew_trivial() {
        let (d, w) = sym_skew(Tensor3::identity());
        assert_eq!(d, SymTensor3::IDENTITY);
        assert_eq!(w, Tensor3::ZERO);
        let g = Tensor3::new([[0.0, 2.0, 0.0], [-2.0, 0.0, 1.0], [0.0, -1.0, 0.0]]);
        let (d, w) = sym_skew(g);
        assert_eq!(d, SymTensor3::ZERO);
        assert_eq!(w, g);
    }

    proptest! {
        #[test]
        fn sym_skew_recombines(g in gen()) {
            let (d, w) = sym_skew(g);
            let r = Tensor3::from(d).plus(w);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((r.m[i][j] - g.m[i][j]).abs() <= 1e-15 * g.max_abs().max(1.0));
                }
            }
            prop_assert!(w.is_skew(0.0));
        }

        #[test]
        fn sph_dev_algebra(a in sym()) {
            let (s, d, _) = decompose(a);
            let n = a.norm().max(1e-300);
            prop_assert!(d.trace().abs() <= 1e-14 * n.max(1.0));
            prop_assert!((s + d - a).max_abs() <= 1e-15 * a.max_abs().max(1.0) * 4.0);
            prop_assert!((d.dev() - d).max_abs() <= 1e-14 * n.max(1.0));
            prop_assert!(d.sph().max_abs() <= 1e-14 * n.max(1.0));
            let lhs = a.norm_sq();
            let rhs = s.norm_sq() + d.norm_sq();
            prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.max(1.0));
        }

        #[test]
        fn bracket_is_energy_neutral(e in sym(), g in gen()) {
            let (_, w) = sym_skew(g);
            let r = jaumann_bracket(e, w).unwrap();
            let o = bracket_oracle(e, w);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((r.to_matrix()[i][j] - o[i][j]).abs() <= 1e-12 * (1.0 + e.norm() * w.norm()));
                }
            }
            prop_assert!(r.trace().abs() <= 1e-12 * (1.0 + e.norm() * w.norm()));
            prop_assert!(r.ddot(e).abs() <= 1e-12 * e.norm_sq().max(1.0) * w.norm().max(1.0));
        }
    }
}
