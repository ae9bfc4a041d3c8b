//! Stored energy, dissipation potential, their conjugates and the resolvent.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

use crate::error::{contract, Error, Result};
use crate::tensors::SymTensor3;

/// Relative slack on the yield ball used when testing membership.
pub const YIELD_SLACK: f64 = 1e-12;

const TRACE_TOL: f64 = 1e-12;

/// Extended real in (−∞, +∞]; `PlusInf` propagates through sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PlusInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::PlusInf => None,
        }
    }

    /// Value as `f64`, mapping the sentinel to `f64::INFINITY` for reporting.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, o: ExtReal) -> ExtReal {
        match (self, o) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PlusInf,
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;
    fn add(self, o: f64) -> ExtReal {
        self + ExtReal::Finite(o)
    }
}

/// Multiplication by a nonnegative finite scalar; 0·∞ is taken as +∞.
impl Mul<f64> for ExtReal {
    type Output = ExtReal;
    fn mul(self, s: f64) -> ExtReal {
        debug_assert!(s >= 0.0);
        match self {
            ExtReal::Finite(a) => ExtReal::Finite(a * s),
            ExtReal::PlusInf => ExtReal::PlusInf,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, o: &ExtReal) -> Option<Ordering> {
        match (self, o) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::PlusInf, ExtReal::PlusInf) => Some(Ordering::Equal),
            (ExtReal::PlusInf, _) => Some(Ordering::Greater),
            (_, ExtReal::PlusInf) => Some(Ordering::Less),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x:e}"),
            ExtReal::PlusInf => write!(f, "+inf"),
        }
    }
}

/// Which member of the dissipation family is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DissipationModel {
    /// P ≡ 0 (Kelvin–Voigt limit, no inelastic flow).
    Zero,
    /// P(A) = ν/2 |A|² without a yield bound.
    Viscous,
    /// P(A) = ν/2 |A|² on the ball |A| ≤ σ_yield, +∞ outside.
    Yield,
}

impl DissipationModel {
    pub fn name(self) -> &'static str {
        match self {
            DissipationModel::Zero => "zero",
            DissipationModel::Viscous => "viscous",
            DissipationModel::Yield => "yield",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(DissipationModel::Zero),
            "viscous" => Some(DissipationModel::Viscous),
            "yield" => Some(DissipationModel::Yield),
            _ => None,
        }
    }
}

/// Model constants and derived analysis constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    pub rho: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub bulk: f64,
    pub shear: f64,
    pub nu: f64,
    pub sigma_yield: f64,
    pub gamma: f64,
    pub dissipation: DissipationModel,
    /// Korn constant; `None` until computed or overridden.
    pub korn: Option<f64>,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            rho: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            bulk: 1.0,
            shear: 1.0,
            nu: 1.0,
            sigma_yield: 1.0,
            gamma: 0.0,
            dissipation: DissipationModel::Yield,
            korn: None,
        }
    }
}

impl MaterialParams {
    /// Check positivity constraints and return `self`.
    pub fn validated(self) -> Result<Self> {
        let checks = [
            ("rho", self.rho, true),
            ("mu1", self.mu1, false),
            ("mu2", self.mu2, false),
            ("K", self.bulk, true),
            ("G", self.shear, true),
            ("nu", self.nu, true),
            ("sigma_yield", self.sigma_yield, true),
            ("gamma", self.gamma, false),
        ];
        for (name, v, strict) in checks {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if !ok {
                let rel = if strict { "> 0" } else { ">= 0" };
                return Err(Error::Config(format!("{name} must be finite and {rel}, got {v}")));
            }
        }
        if let Some(mu) = self.korn {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(Error::Config(format!("Korn constant must be > 0, got {mu}")));
            }
        }
        Ok(self)
    }

    /// Strong convexity constant of φ.
    pub fn kappa(&self) -> f64 {
        self.bulk.min(self.shear)
    }

    /// Quadratic growth constant of φ.
    pub fn beta(&self) -> f64 {
        0.5 * self.kappa()
    }

    /// Bound on the third derivative of φ; zero for the quadratic family.
    pub fn third_derivative_bound(&self) -> f64 {
        0.0
    }

    /// Korn constant, failing when it has not been set.
    pub fn korn_mu(&self) -> Result<f64> {
        self.korn.ok_or_else(|| Error::Config("Korn constant not computed".into()))
    }

    pub fn with_korn(mut self, mu: f64) -> Self {
        self.korn = Some(mu);
        self
    }
}

/// Convex stored-energy density φ and its Legendre data.
pub trait StoredEnergy {
    fn phi(&self, e: SymTensor3) -> f64;
    fn dphi(&self, e: SymTensor3) -> SymTensor3;
    fn dphi_inv(&self, b: SymTensor3) -> SymTensor3;
    fn phi_conj(&self, b: SymTensor3) -> f64;
    /// Strong convexity constant.
    fn kappa(&self) -> f64;
    /// Bound on |D³φ|.
    fn third_derivative_bound(&self) -> f64;
}

/// Convex dissipation density P with conjugate and resolvent.
pub trait DissipationPotential {
    fn density(&self, a: SymTensor3) -> ExtReal;
    fn conj(&self, x: SymTensor3) -> ExtReal;
    /// argmin over trace-free A of ½|A − X|² + λ P(A).
    fn resolvent(&self, x: SymTensor3, lambda: f64) -> SymTensor3;
}

/// φ(E) = K/2 |sph E|² + G/2 |dev E|².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticEnergy {
    pub bulk: f64,
    pub shear: f64,
}

impl StoredEnergy for QuadraticEnergy {
    fn phi(&self, e: SymTensor3) -> f64 {
        0.5 * self.bulk * e.sph().norm_sq() + 0.5 * self.shear * e.dev().norm_sq()
    }

    fn dphi(&self, e: SymTensor3) -> SymTensor3 {
        e.sph() * self.bulk + e.dev() * self.shear
    }

    fn dphi_inv(&self, b: SymTensor3) -> SymTensor3 {
        b.sph() * (1.0 / self.bulk) + b.dev() * (1.0 / self.shear)
    }

    fn phi_conj(&self, b: SymTensor3) -> f64 {
        b.sph().norm_sq() / (2.0 * self.bulk) + b.dev().norm_sq() / (2.0 * self.shear)
    }

    fn kappa(&self) -> f64 {
        self.bulk.min(self.shear)
    }

    fn third_derivative_bound(&self) -> f64 {
        0.0
    }
}

/// The quadratic/yield dissipation family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YieldDissipation {
    pub model: DissipationModel,
    pub nu: f64,
    pub sigma: f64,
}

impl YieldDissipation {
    fn radius(&self) -> f64 {
        match self.model {
            DissipationModel::Yield => self.sigma,
            _ => f64::INFINITY,
        }
    }
}

impl DissipationPotential for YieldDissipation {
    fn density(&self, a: SymTensor3) -> ExtReal {
        let n2 = a.norm_sq();
        match self.model {
            DissipationModel::Zero => ExtReal::Finite(0.0),
            DissipationModel::Viscous => ExtReal::Finite(0.5 * self.nu * n2),
            DissipationModel::Yield => {
                if n2.sqrt() <= self.sigma * (1.0 + YIELD_SLACK) {
                    ExtReal::Finite(0.5 * self.nu * n2)
                } else {
                    ExtReal::PlusInf
                }
            }
        }
    }

    fn conj(&self, x: SymTensor3) -> ExtReal {
        let n = x.norm();
        match self.model {
            DissipationModel::Zero => {
                if n == 0.0 {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PlusInf
                }
            }
            DissipationModel::Viscous => ExtReal::Finite(n * n / (2.0 * self.nu)),
            DissipationModel::Yield => {
                if n <= self.nu * self.sigma {
                    ExtReal::Finite(n * n / (2.0 * self.nu))
                } else {
                    ExtReal::Finite(self.sigma * n - 0.5 * self.nu * self.sigma * self.sigma)
                }
            }
        }
    }

    fn resolvent(&self, x: SymTensor3, lambda: f64) -> SymTensor3 {
        match self.model {
            DissipationModel::Zero => x,
            _ => {
                let shrunk = x * (1.0 / (1.0 + lambda * self.nu));
                let n = shrunk.norm();
                let r = self.radius();
                if n <= r {
                    shrunk
                } else {
                    x * (r / x.norm())
                }
            }
        }
    }
}

pub fn stored_energy(p: &MaterialParams) -> QuadraticEnergy {
    QuadraticEnergy { bulk: p.bulk, shear: p.shear }
}

pub fn dissipation(p: &MaterialParams) -> YieldDissipation {
    YieldDissipation { model: p.dissipation, nu: p.nu, sigma: p.sigma_yield }
}

pub fn phi(e: SymTensor3, p: &MaterialParams) -> f64 {
    stored_energy(p).phi(e)
}

pub fn dphi(e: SymTensor3, p: &MaterialParams) -> SymTensor3 {
    stored_energy(p).dphi(e)
}

pub fn dphi_inv(b: SymTensor3, p: &MaterialParams) -> SymTensor3 {
    stored_energy(p).dphi_inv(b)
}

pub fn phi_conj(b: SymTensor3, p: &MaterialParams) -> f64 {
    stored_energy(p).phi_conj(b)
}

/// Newtonian viscous stress S = 2μ₁ dev D + 3μ₂ sph D.
pub fn newtonian_stress(d: SymTensor3, p: &MaterialParams) -> SymTensor3 {
    d.dev() * (2.0 * p.mu1) + d.sph() * (3.0 * p.mu2)
}

fn require_trace_free(a: SymTensor3, what: &str) -> Result<()> {
    if a.is_trace_free(TRACE_TOL) {
        Ok(())
    } else {
        Err(contract(format!("{what}: argument is not trace-free (tr = {:e})", a.trace())))
    }
}

/// Dissipation density P(A) for trace-free A.
pub fn p_density(a: SymTensor3, p: &MaterialParams) -> Result<ExtReal> {
    require_trace_free(a, "p_density")?;
    Ok(dissipation(p).density(a))
}

/// Conjugate density P*(X) for trace-free X.
pub fn p_conj(x: SymTensor3, p: &MaterialParams) -> Result<ExtReal> {
    require_trace_free(x, "p_conj")?;
    Ok(dissipation(p).conj(x))
}

/// Resolvent (I + λ∂P)⁻¹ evaluated at trace-free X.
pub fn resolvent_p(x: SymTensor3, lambda: f64, p: &MaterialParams) -> Result<SymTensor3> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(contract(format!("resolvent_p: lambda must be > 0, got {lambda}")));
    }
    require_trace_free(x, "resolvent_p")?;
    Ok(dissipation(p).resolvent(x, lambda))
}

/// Fenchel gap P(A) + P*(X) − X:A.
pub fn fenchel_gap(a: SymTensor3, x: SymTensor3, p: &MaterialParams) -> Result<ExtReal> {
    require_trace_free(a, "fenchel_gap")?;
    require_trace_free(x, "fenchel_gap")?;
    let d = dissipation(p);
    Ok(d.density(a) + d.conj(x) + (-x.ddot(a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> MaterialParams {
        MaterialParams { bulk: 2.0, shear: 3.0, nu: 1.5, sigma_yield: 0.7, ..Default::default() }
    }

    fn rand_sym(rng: &mut ChaCha8Rng, s: f64) -> SymTensor3 {
        SymTensor3::from_array(std::array::from_fn(|_| rng.gen_range(-s..s)))
    }

    /// Quadratic form oracle: φ(E) = ½ eᵀ C e over the 6 weighted components.
    fn phi_oracle(e: SymTensor3, k: f64, g: f64) -> f64 {
        let m = e.to_matrix();
        let tr = m[0][0] + m[1][1] + m[2][2];
        let mut dev2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = m[i][j] - if i == j { tr / 3.0 } else { 0.0 };
                dev2 += d * d;
            }
        }
        0.5 * k * tr * tr / 3.0 + 0.5 * g * dev2
    }

    #[test]
    fn phi_examples() {
        let p = MaterialParams { bulk: 2.0, shear: 5.0, ..Default::default() };
        assert_eq!(phi(SymTensor3::ZERO, &p), 0.0);
        assert!((phi(SymTensor3::IDENTITY, &p) - 3.0).abs() < 1e-15);
        assert!((phi_oracle(SymTensor3::IDENTITY, 2.0, 5.0) - 3.0).abs() < 1e-15);
        let p = MaterialParams { shear: 2.0, ..Default::default() };
        let e = SymTensor3::new(0.0, 0.0, 0.0, 0.5f64.sqrt(), 0.0, 0.0);
        assert!((e.norm() - 1.0).abs() < 1e-15);
        assert!((phi(e, &p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_matches_oracle_and_growth() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let e = rand_sym(&mut rng, 3.0);
            let v = phi(e, &p);
            assert!((v - phi_oracle(e, p.bulk, p.shear)).abs() <= 1e-12 * v.max(1.0));
            assert!(v >= p.beta() * e.norm_sq() - 1.0);
        }
    }

    #[test]
    fn dphi_examples_and_finite_difference() {
        let p = MaterialParams { bulk: 2.0, ..Default::default() };
        assert_eq!(dphi(SymTensor3::ZERO, &p), SymTensor3::ZERO);
        assert!((dphi(SymTensor3::IDENTITY, &p) - SymTensor3::IDENTITY * 2.0).max_abs() < 1e-15);
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for _ in 0..100 {
            let e = rand_sym(&mut rng, 2.0);
            let g = dphi(e, &p);
            // Partial derivative w.r.t. stored component c is w_c · g_c.
            for c in 0..6 {
                let mut ep = e.to_array();
                let mut em = e.to_array();
                ep[c] += h;
                em[c] -= h;
                let fd = (phi(SymTensor3::from_array(ep), &p) - phi(SymTensor3::from_array(em), &p)) / (2.0 * h);
                let exact = crate::tensors::COMPONENT_WEIGHTS[c] * g.to_array()[c];
                assert!((fd - exact).abs() <= 1e-8 * exact.abs().max(1.0), "c={c} fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn dphi_round_trip_and_commutation() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let e = rand_sym(&mut rng, 5.0);
            let b = dphi(e, &p);
            assert!((dphi_inv(b, &p) - e).max_abs() <= 1e-13 * e.max_abs().max(1.0));
            let eb = crate::tensors::Tensor3::from(e).matmul(b.into());
            let be = crate::tensors::Tensor3::from(b).matmul(e.into());
            let diff = eb.plus(be.scale(-1.0)).max_abs();
            assert!(diff <= 1e-12 * (e.norm() * b.norm()).max(1.0));
        }
    }

    #[test]
    fn phi_conj_fenchel() {
        let p = params();
        assert_eq!(phi_conj(SymTensor3::ZERO, &p), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let b = rand_sym(&mut rng, 5.0);
            let a = dphi_inv(b, &p);
            let lhs = phi(a, &p) + phi_conj(b, &p);
            let rhs = a.ddot(b);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
        for _ in 0..1000 {
            let a = rand_sym(&mut rng, 5.0);
            let b = rand_sym(&mut rng, 5.0);
            assert!(phi_conj(b, &p) >= b.ddot(a) - phi(a, &p) - 1e-12);
        }
    }

    fn rand_dev(rng: &mut ChaCha8Rng, s: f64) -> SymTensor3 {
        rand_sym(rng, s).dev()
    }

    #[test]
    fn p_density_examples() {
        let p = MaterialParams { nu: 2.0, sigma_yield: 0.5, ..Default::default() };
        assert_eq!(p_density(SymTensor3::ZERO, &p).unwrap(), ExtReal::Finite(0.0));
        let a = SymTensor3::new(0.0, 0.0, 0.0, 0.5 / 2f64.sqrt(), 0.0, 0.0);
        let v = p_density(a, &p).unwrap().finite().unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert_eq!(p_density(a * 1.01, &p).unwrap(), ExtReal::PlusInf);
        assert!(p_density(SymTensor3::IDENTITY, &p).is_err());
    }

    #[test]
    fn p_conj_branches_agree() {
        let p = params();
        assert_eq!(p_conj(SymTensor3::ZERO, &p).unwrap(), ExtReal::Finite(0.0));
        let dir = SymTensor3::diag(1.0, -1.0, 0.0);
        let x = dir * (p.nu * p.sigma_yield / dir.norm());
        let v = p_conj(x, &p).unwrap().finite().unwrap();
        assert!((v - 0.5 * p.nu * p.sigma_yield * p.sigma_yield).abs() < 1e-14);
        let eps = 1e-9;
        let lo = p_conj(x * (1.0 - eps), &p).unwrap().to_f64();
        let hi = p_conj(x * (1.0 + eps), &p).unwrap().to_f64();
        assert!((hi - lo).abs() < 1e-8);
    }

    #[test]
    fn resolvent_examples() {
        let p = MaterialParams { nu: 1.0, sigma_yield: 10.0, ..Default::default() };
        let x = SymTensor3::diag(1.0, -1.0, 0.0) * (1.0 / 2f64.sqrt());
        assert_eq!(resolvent_p(SymTensor3::ZERO, 1.0, &p).unwrap(), SymTensor3::ZERO);
        assert!((resolvent_p(x, 1.0, &p).unwrap() - x * 0.5).max_abs() < 1e-15);
        let p = MaterialParams { nu: 1.0, sigma_yield: 1.0, ..Default::default() };
        let x4 = x * 4.0;
        assert!((resolvent_p(x4, 1.0, &p).unwrap() - x4 * 0.25).max_abs() < 1e-15);
        assert!(resolvent_p(x, 0.0, &p).is_err());
        assert!(resolvent_p(SymTensor3::IDENTITY, 1.0, &p).is_err());
    }

    #[test]
    fn resolvent_nonexpansive_and_feasible() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x1 = rand_dev(&mut rng, 3.0);
            let x2 = rand_dev(&mut rng, 3.0);
            let lambda = rng.gen_range(0.01..3.0);
            let r1 = resolvent_p(x1, lambda, &p).unwrap();
            let r2 = resolvent_p(x2, lambda, &p).unwrap();
            assert!((r1 - r2).norm() <= (x1 - x2).norm() + 1e-14);
            assert!(r1.norm() <= p.sigma_yield + 1e-12);
        }
    }

    #[test]
    fn fenchel_gap_examples() {
        let p = params();
        let a = SymTensor3::new(0.1, -0.05, -0.05, 0.1, 0.0, 0.0);
        assert!(a.norm() < p.sigma_yield);
        assert_eq!(fenchel_gap(SymTensor3::ZERO, SymTensor3::ZERO, &p).unwrap(), ExtReal::Finite(0.0));
        let g = fenchel_gap(a, a * p.nu, &p).unwrap().finite().unwrap();
        assert!(g.abs() <= 1e-15);
        let perp = SymTensor3::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert!(perp.ddot(a).abs() < 1e-15);
        let g = fenchel_gap(a, a * p.nu + perp * 1e-3, &p).unwrap().finite().unwrap();
        assert!(g > 0.0);
        let out = a * (2.0 * p.sigma_yield / a.norm());
        assert_eq!(fenchel_gap(out, a, &p).unwrap(), ExtReal::PlusInf);
    }

    #[test]
    fn midpoint_convexity_of_composed_density() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = |e: SymTensor3| p_density(dphi(e, &p).dev(), &p).unwrap();
        let mut n = 0;
        while n < 1000 {
            let e1 = rand_sym(&mut rng, 0.3);
            let e2 = rand_sym(&mut rng, 0.3);
            let (Some(a), Some(b)) = (f(e1).finite(), f(e2).finite()) else { continue };
            let m = f((e1 + e2) * 0.5).finite().unwrap();
            assert!(m <= 0.5 * (a + b) + 1e-12);
            n += 1;
        }
    }

    #[test]
    fn ext_real_propagates() {
        let a = ExtReal::Finite(1.0);
        assert_eq!(a + ExtReal::PlusInf, ExtReal::PlusInf);
        assert!(ExtReal::PlusInf > ExtReal::Finite(f64::MAX));
        assert_eq!((ExtReal::PlusInf * 0.0), ExtReal::PlusInf);
    }

    #[test]
    fn params_validation() {
        assert!(MaterialParams::default().validated().is_ok());
        assert!(MaterialParams { rho: 0.0, ..Default::default() }.validated().is_err());
        assert!(MaterialParams { gamma: -1.0, ..Default::default() }.validated().is_err());
        let p = MaterialParams { bulk: 3.0, shear: 2.0, ..Default::default() };
        assert_eq!(p.kappa(), 2.0);
        assert_eq!(p.beta(), 1.0);
        assert_eq!(p.third_derivative_bound(), 0.0);
    }
}
