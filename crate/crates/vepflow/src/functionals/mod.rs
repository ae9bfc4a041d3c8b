//! Discrete energies, dissipations, the coupling form, the incremental
//! functional and the regularity weights.
//!
//! Quadrature conventions, shared with the stepper so that the discrete
//! identities are exact:
//! * kinetic energy, velocity products and every volume integral of the
//!   coupling form use 2×2 Gauss;
//! * stored energy, strain products and the dissipation potential are
//!   lumped at the nodes.

mod forcing;

pub use forcing::{interval_average, interval_average_strain, load_vector, Forcing, Load, NoForcing};

use crate::discretization::{Mesh, TensorField, VectorField};
use crate::error::{Error, Result};
use crate::potentials::{dissipation, dphi, newtonian_stress, phi, DissipationPotential, ExtReal, MaterialParams};
use crate::tensors::{bracket, sym_skew, SymTensor3, Tensor3};

/// Inflation applied to sampled sup-norms of test functions.
pub const NORM_SAFETY: f64 = 1.05;
/// Sub-samples per cell edge when estimating sup-norms of closed-form tests.
pub const NORM_REFINE: usize = 4;

/// Velocity and strain at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub v: VectorField,
    pub e: TensorField,
}

impl State {
    pub fn new(v: VectorField, e: TensorField) -> Self {
        State { v, e }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        State { v: VectorField::zeros(mesh.nodes()), e: TensorField::zeros(mesh.nodes()) }
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &State, b: f64) -> State {
        let mut v = self.v.scaled(a);
        v.axpy(b, &other.v);
        let mut e = self.e.scaled(a);
        e.axpy(b, &other.e);
        State { v, e }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        mesh.check_vector(&self.v)?;
        mesh.check_tensor(&self.e)
    }
}

/// Smooth velocity-type test function; `grad[i][j] = ∂_j ψ_i`.
pub trait SmoothVector: Sync {
    fn value(&self, x: f64, y: f64) -> [f64; 2];
    fn grad(&self, x: f64, y: f64) -> [[f64; 2]; 2];
}

/// Smooth tensor-type test function; `grad = [∂_x Ψ, ∂_y Ψ]`.
pub trait SmoothTensor: Sync {
    fn value(&self, x: f64, y: f64) -> SymTensor3;
    fn grad(&self, x: f64, y: f64) -> [SymTensor3; 2];
}

/// The zero vector field.
pub struct ZeroVector;

impl SmoothVector for ZeroVector {
    fn value(&self, _x: f64, _y: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn grad(&self, _x: f64, _y: f64) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

/// The zero tensor field.
pub struct ZeroTensor;

impl SmoothTensor for ZeroTensor {
    fn value(&self, _x: f64, _y: f64) -> SymTensor3 {
        SymTensor3::ZERO
    }
    fn grad(&self, _x: f64, _y: f64) -> [SymTensor3; 2] {
        [SymTensor3::ZERO; 2]
    }
}

/// Sup-norm data of a test pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SupNorms {
    pub psi: f64,
    pub grad_psi: f64,
    pub div_psi: f64,
    pub cap: f64,
    pub grad_cap: f64,
}

impl SupNorms {
    fn max(self, o: SupNorms) -> SupNorms {
        SupNorms {
            psi: self.psi.max(o.psi),
            grad_psi: self.grad_psi.max(o.grad_psi),
            div_psi: self.div_psi.max(o.div_psi),
            cap: self.cap.max(o.cap),
            grad_cap: self.grad_cap.max(o.grad_cap),
        }
    }

    pub fn scaled(self, s: f64) -> SupNorms {
        let s = s.abs();
        SupNorms {
            psi: s * self.psi,
            grad_psi: s * self.grad_psi,
            div_psi: s * self.div_psi,
            cap: s * self.cap,
            grad_cap: s * self.grad_cap,
        }
    }

    fn include(&mut self, psi: [f64; 2], g: [[f64; 2]; 2], cap: SymTensor3, gc: [SymTensor3; 2]) {
        let gn = (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2)).sqrt();
        self.psi = self.psi.max(psi[0].hypot(psi[1]));
        self.grad_psi = self.grad_psi.max(gn);
        self.div_psi = self.div_psi.max((g[0][0] + g[1][1]).abs());
        self.cap = self.cap.max(cap.norm());
        self.grad_cap = self.grad_cap.max((gc[0].norm_sq() + gc[1].norm_sq()).sqrt());
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct TestQp {
    psi: [f64; 2],
    grad: Tensor3,
    d: SymTensor3,
    div: f64,
    cap: SymTensor3,
    cap_dx: SymTensor3,
    cap_dy: SymTensor3,
}

/// Admissible test pair (ψ, Ψ) with cached sup-norms and quadrature data.
#[derive(Clone, Debug)]
pub struct TestPair {
    pub label: String,
    pub psi: VectorField,
    pub cap: TensorField,
    pub norms: SupNorms,
    qp: Vec<TestQp>,
}

fn discrete_norms(mesh: &Mesh, psi: &VectorField, cap: &TensorField) -> SupNorms {
    let mut n = SupNorms::default();
    let corners = [mesh.basis(0.0, 0.0), mesh.basis(1.0, 0.0), mesh.basis(1.0, 1.0), mesh.basis(0.0, 1.0)];
    for e in 0..mesh.elements() {
        let nodes = mesh.element_nodes(e);
        for b in &corners {
            let vp = psi.eval(&nodes, b);
            let tp = cap.eval(&nodes, b);
            let g = vp.grad.m;
            n.include(vp.v, [[g[0][0], g[0][1]], [g[1][0], g[1][1]]], tp.value, [tp.dx, tp.dy]);
        }
    }
    n
}

impl TestPair {
    pub fn zero(mesh: &Mesh) -> Self {
        Self::from_fields(mesh, VectorField::zeros(mesh.nodes()), TensorField::zeros(mesh.nodes()), "zero")
            .expect("zero pair is admissible")
    }

    /// Test pair from nodal fields; norms are the exact interpolant maxima, inflated.
    pub fn from_fields(mesh: &Mesh, psi: VectorField, cap: TensorField, label: &str) -> Result<Self> {
        mesh.check_vector(&psi)?;
        mesh.check_tensor(&cap)?;
        if !mesh.is_admissible(&psi, 1e-12) {
            return Err(Error::Contract(format!("test pair {label}: ψ violates the boundary constraints")));
        }
        let norms = discrete_norms(mesh, &psi, &cap).scaled(NORM_SAFETY);
        Ok(Self::build(mesh, psi, cap, norms, label))
    }

    /// Test pair from closed-form fields. The nodal interpolant is used in
    /// every functional; norms take the larger of the refined closed-form
    /// samples and the interpolant maxima.
    pub fn from_smooth(mesh: &Mesh, psi: &dyn SmoothVector, cap: &dyn SmoothTensor, label: &str) -> Result<Self> {
        let mut raw = VectorField::zeros(mesh.nodes());
        for i in 0..mesh.nodes() {
            let [x, y] = mesh.node_xy(i);
            raw.set(i, psi.value(x, y));
        }
        if !mesh.is_admissible(&raw, 1e-12) {
            return Err(Error::Contract(format!("test pair {label}: ψ violates the boundary constraints")));
        }
        let mut v = raw;
        mesh.constrain(&mut v);
        let c = mesh.interpolate_tensor(|x, y| cap.value(x, y));
        let mut sampled = SupNorms::default();
        let (mx, my) = (NORM_REFINE * mesh.nx, NORM_REFINE * mesh.ny);
        for j in 0..=my {
            for i in 0..=mx {
                let x = mesh.lx * i as f64 / mx as f64;
                let y = mesh.ly * j as f64 / my as f64;
                sampled.include(psi.value(x, y), psi.grad(x, y), cap.value(x, y), cap.grad(x, y));
            }
        }
        let norms = sampled.max(discrete_norms(mesh, &v, &c)).scaled(NORM_SAFETY);
        Ok(Self::build(mesh, v, c, norms, label))
    }

    fn build(mesh: &Mesh, psi: VectorField, cap: TensorField, norms: SupNorms, label: &str) -> Self {
        let q = mesh.gauss2();
        let mut qp = Vec::with_capacity(mesh.elements() * q.len());
        for e in 0..mesh.elements() {
            let nodes = mesh.element_nodes(e);
            for g in &q {
                let vp = psi.eval(&nodes, &g.basis);
                let tp = cap.eval(&nodes, &g.basis);
                let (d, _) = sym_skew(vp.grad);
                qp.push(TestQp { psi: vp.v, grad: vp.grad, d, div: vp.div(), cap: tp.value, cap_dx: tp.dx, cap_dy: tp.dy });
            }
        }
        TestPair { label: label.to_string(), psi, cap, norms, qp }
    }

    /// λ·(ψ, Ψ) with norms scaled accordingly.
    pub fn scaled(&self, lambda: f64) -> TestPair {
        let qp = self
            .qp
            .iter()
            .map(|q| TestQp {
                psi: [lambda * q.psi[0], lambda * q.psi[1]],
                grad: q.grad.scale(lambda),
                d: q.d * lambda,
                div: lambda * q.div,
                cap: q.cap * lambda,
                cap_dx: q.cap_dx * lambda,
                cap_dy: q.cap_dy * lambda,
            })
            .collect();
        TestPair {
            label: format!("{}*{lambda}", self.label),
            psi: self.psi.scaled(lambda),
            cap: self.cap.scaled(lambda),
            norms: self.norms.scaled(lambda),
            qp,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.psi.max_abs() == 0.0 && self.cap.max_norm() == 0.0
    }

    /// Lumped 𝒫(dev Ψ).
    pub fn p_term(&self, mesh: &Mesh, p: &MaterialParams) -> ExtReal {
        p_lumped(mesh, p, &self.cap)
    }
}

/// Lumped Σ m_i P(dev B_i).
fn p_lumped(mesh: &Mesh, p: &MaterialParams, b: &TensorField) -> ExtReal {
    let d = dissipation(p);
    let mut s = ExtReal::Finite(0.0);
    for (i, m) in mesh.lumped_mass().iter().enumerate() {
        s = s + d.density(b.get(i).dev()) * *m;
        if !s.is_finite() {
            break;
        }
    }
    s
}

#[derive(Clone, Copy, Debug, Default)]
struct StateQp {
    v: [f64; 2],
    d: SymTensor3,
    w: Tensor3,
    div: f64,
    e: SymTensor3,
    ke: SymTensor3,
    ke_dx: SymTensor3,
    ke_dy: SymTensor3,
    phi: f64,
    stress: SymTensor3,
}

/// A state with its quadrature data and scalar functionals precomputed.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub state: State,
    /// ∫ ρ/2 |v|².
    pub kinetic: f64,
    /// Σ m_i φ(E_i).
    pub stored: f64,
    /// Σ m_i κ/2 |E_i|².
    pub stored_kappa: f64,
    /// ∫ |∇v|².
    pub grad_sq: f64,
    /// 𝒟₀(v) = ∫ S(v):D(v).
    pub dissipation0: f64,
    /// γ ∫ |∇[Dφ(E)]|².
    pub diffusion: f64,
    /// Σ m_i P(dev Dφ(E_i)).
    pub p_term: ExtReal,
    weights: Vec<f64>,
    qp: Vec<StateQp>,
}

impl Prepared {
    pub fn new(mesh: &Mesh, p: &MaterialParams, s: &State) -> Self {
        let q = mesh.gauss2();
        let weights: Vec<f64> = q.iter().map(|g| g.weight).collect();
        let ke_field = s.e.map(|e| dphi(e, p));
        let mut qp = Vec::with_capacity(mesh.elements() * q.len());
        let (mut kinetic, mut grad_sq, mut d0, mut diff) = (0.0, 0.0, 0.0, 0.0);
        for el in 0..mesh.elements() {
            let nodes = mesh.element_nodes(el);
            for g in &q {
                let vp = s.v.eval(&nodes, &g.basis);
                let ep = s.e.eval(&nodes, &g.basis);
                let kp = ke_field.eval(&nodes, &g.basis);
                let (d, w) = sym_skew(vp.grad);
                let stress = newtonian_stress(d, p);
                kinetic += g.weight * 0.5 * p.rho * (vp.v[0] * vp.v[0] + vp.v[1] * vp.v[1]);
                grad_sq += g.weight * vp.grad.norm().powi(2);
                d0 += g.weight * stress.ddot(d);
                diff += g.weight * p.gamma * (kp.dx.norm_sq() + kp.dy.norm_sq());
                qp.push(StateQp {
                    v: vp.v,
                    d,
                    w,
                    div: vp.div(),
                    e: ep.value,
                    ke: kp.value,
                    ke_dx: kp.dx,
                    ke_dy: kp.dy,
                    phi: phi(ep.value, p),
                    stress,
                });
            }
        }
        let (mut stored, mut stored_kappa) = (0.0, 0.0);
        let kappa = p.kappa();
        for (i, m) in mesh.lumped_mass().iter().enumerate() {
            let e = s.e.get(i);
            stored += m * phi(e, p);
            stored_kappa += m * 0.5 * kappa * e.norm_sq();
        }
        Prepared {
            state: s.clone(),
            kinetic,
            stored,
            stored_kappa,
            grad_sq,
            dissipation0: d0,
            diffusion: diff,
            p_term: p_lumped(mesh, p, &ke_field),
            weights,
            qp,
        }
    }

    /// 𝓔(v, E).
    pub fn energy(&self) -> f64 {
        self.kinetic + self.stored
    }

    /// 𝒟_γ(v, E).
    pub fn dissipation(&self) -> f64 {
        self.dissipation0 + self.diffusion
    }

    /// The ten integrals of 𝒩_γ(v, E | ψ, Ψ).
    pub fn coupling(&self, t: &TestPair, p: &MaterialParams) -> CouplingTerms {
        let nq = self.weights.len();
        let mut out = [0.0; 10];
        for (k, (s, c)) in self.qp.iter().zip(&t.qp).enumerate() {
            let w = self.weights[k % nq];
            let mut conv = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    conv += c.grad.m[i][j] * s.v[i] * s.v[j];
                }
            }
            let adv_cap = c.cap_dx * s.v[0] + c.cap_dy * s.v[1];
            let terms = [
                0.5 * p.rho * s.div * (s.v[0] * c.psi[0] + s.v[1] * c.psi[1]),
                p.rho * conv,
                -s.ke.ddot(c.d),
                -s.phi * c.div,
                -s.stress.ddot(c.d),
                s.div * s.e.ddot(c.cap),
                adv_cap.ddot(s.e),
                -bracket(s.e, s.w).ddot(c.cap),
                s.d.ddot(c.cap),
                -p.gamma * (s.ke_dx.ddot(c.cap_dx) + s.ke_dy.ddot(c.cap_dy)),
            ];
            for (o, v) in out.iter_mut().zip(terms) {
                *o += w * v;
            }
        }
        CouplingTerms { t: out }
    }

    /// ∫ ρ a·ψ with consistent Gauss quadrature.
    fn velocity_product(&self, a: &VectorField, t: &TestPair, mesh: &Mesh, p: &MaterialParams) -> f64 {
        let q = mesh.gauss2();
        let mut s = 0.0;
        for el in 0..mesh.elements() {
            let nodes = mesh.element_nodes(el);
            for (k, g) in q.iter().enumerate() {
                let av = a.eval(&nodes, &g.basis).v;
                let c = &t.qp[el * q.len() + k];
                s += g.weight * p.rho * (av[0] * c.psi[0] + av[1] * c.psi[1]);
            }
        }
        s
    }
}

/// The ten integrals of the coupling form, in definition order.
///
/// 0 Témam, 1 convection, 2 −Dφ(E):∇ψ, 3 −φ(E) div ψ, 4 −S(v):D(ψ),
/// 5 (div v) E:Ψ, 6 (v·∇Ψ):E, 7 −(EW−WE):Ψ, 8 D(v):Ψ, 9 −γ∇Dφ(E)⋮∇Ψ.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CouplingTerms {
    pub t: [f64; 10],
}

impl CouplingTerms {
    pub fn inertial(&self) -> f64 {
        self.t[0] + self.t[1]
    }
    pub fn stress(&self) -> f64 {
        self.t[2] + self.t[3]
    }
    pub fn viscous(&self) -> f64 {
        self.t[4]
    }
    pub fn transport(&self) -> f64 {
        self.t[5] + self.t[6] + self.t[7]
    }
    pub fn linear_strain(&self) -> f64 {
        self.t[8] + self.t[9]
    }
    pub fn total(&self) -> f64 {
        self.inertial() + self.stress() + self.viscous() + self.transport() + self.linear_strain()
    }
}

/// 𝓔(v, E).
pub fn energy(mesh: &Mesh, p: &MaterialParams, s: &State) -> f64 {
    Prepared::new(mesh, p, s).energy()
}

/// 𝒟_γ(v, E).
pub fn dissipation_rate(mesh: &Mesh, p: &MaterialParams, s: &State) -> f64 {
    Prepared::new(mesh, p, s).dissipation()
}

/// 𝒩_γ(v, E | ψ, Ψ) split into its integrals.
pub fn coupling(mesh: &Mesh, p: &MaterialParams, s: &State, t: &TestPair) -> CouplingTerms {
    Prepared::new(mesh, p, s).coupling(t, p)
}

/// Lumped 𝒫(dev Dφ(E)).
pub fn p_term(mesh: &Mesh, p: &MaterialParams, e: &TensorField) -> ExtReal {
    p_lumped(mesh, p, &e.map(|x| dphi(x, p)))
}

/// Lumped Σ m_i a_i:b_i.
pub fn strain_product(mesh: &Mesh, a: &TensorField, b: &TensorField) -> f64 {
    mesh.lumped_mass().iter().enumerate().map(|(i, m)| m * a.get(i).ddot(b.get(i))).sum()
}

/// Nodal Dφ(E).
pub fn stress_field(p: &MaterialParams, e: &TensorField) -> TensorField {
    e.map(|x| dphi(x, p))
}

/// Pieces of ℱⁿ_τ(v, E | ψ, Ψ).
#[derive(Clone, Copy, Debug)]
pub struct FParts {
    pub energy: f64,
    pub energy_prev: f64,
    /// −∫ ρ(v − v_prev)·ψ.
    pub kinetic_cross: f64,
    /// −∫ (E − E_prev):Ψ.
    pub strain_cross: f64,
    pub tau: f64,
    pub dissipation: f64,
    pub p_state: ExtReal,
    pub coupling: CouplingTerms,
    pub p_test: ExtReal,
    /// ℬⁿ(v − ψ), including a strain source when present.
    pub forcing: f64,
}

impl FParts {
    /// ℱⁿ_τ; +∞ when either 𝒫 term is infinite.
    pub fn total(&self) -> ExtReal {
        match (self.p_state, self.p_test) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(
                self.energy - self.energy_prev
                    + self.kinetic_cross
                    + self.strain_cross
                    + self.tau * (self.dissipation + a + self.coupling.total() - b - self.forcing),
            ),
            _ => ExtReal::PlusInf,
        }
    }

    pub fn test_admissible(&self) -> bool {
        self.p_test.is_finite()
    }
}

/// ℱⁿ_τ evaluated on prepared states.
pub fn f_step_prepared(
    mesh: &Mesh,
    p: &MaterialParams,
    s: &Prepared,
    prev: &Prepared,
    t: &TestPair,
    tau: f64,
    load: &Load,
) -> FParts {
    let mut dv = s.state.v.clone();
    dv.axpy(-1.0, &prev.state.v);
    let mut de = s.state.e.clone();
    de.axpy(-1.0, &prev.state.e);
    let kinetic_cross = -s.velocity_product(&dv, t, mesh, p);
    let strain_cross = -strain_product(mesh, &de, &t.cap);
    let mut vm = s.state.v.clone();
    vm.axpy(-1.0, &t.psi);
    let ke = stress_field(p, &s.state.e);
    let mut km = ke;
    km.axpy(-1.0, &t.cap);
    FParts {
        energy: s.energy(),
        energy_prev: prev.energy(),
        kinetic_cross,
        strain_cross,
        tau,
        dissipation: s.dissipation(),
        p_state: s.p_term,
        coupling: s.coupling(t, p),
        p_test: t.p_term(mesh, p),
        forcing: load.pair(&vm, &km),
    }
}

/// ℱⁿ_τ(v, E | ψ, Ψ).
pub fn f_step(mesh: &Mesh, p: &MaterialParams, s: &State, prev: &State, t: &TestPair, tau: f64, load: &Load) -> Result<FParts> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Contract(format!("f_step: tau must be > 0, got {tau}")));
    }
    s.check(mesh)?;
    prev.check(mesh)?;
    Ok(f_step_prepared(mesh, p, &Prepared::new(mesh, p, s), &Prepared::new(mesh, p, prev), t, tau, load))
}

/// Construction weight K̃(ψ, Ψ).
pub fn weight_construct(norms: &SupNorms, p: &MaterialParams) -> Result<f64> {
    let mu = p.korn_mu()?;
    let kappa = p.kappa();
    let m = p.third_derivative_bound();
    Ok(2.0 * p.rho / mu * norms.psi.powi(2)
        + 2f64.max(m / kappa) * norms.grad_psi
        + norms.div_psi
        + 6.0 / (kappa * mu) * norms.cap.powi(2)
        + norms.grad_cap / kappa)
}

/// Limit weight 𝒦(ψ, Ψ).
pub fn weight_limit(norms: &SupNorms, p: &MaterialParams) -> Result<f64> {
    let mu = p.korn_mu()?;
    let kappa = p.kappa();
    let m = p.third_derivative_bound();
    Ok(m / kappa * norms.grad_psi + norms.div_psi + 5.0 / (kappa * mu) * norms.cap.powi(2))
}

/// 𝒥_{(ψ,Ψ)}(v, E).
pub fn j_functional(s: &Prepared, t: &TestPair, p: &MaterialParams) -> Result<f64> {
    let c = s.coupling(t, p);
    let k = weight_limit(&t.norms, p)?;
    Ok(c.t[2] + c.t[3] + c.t[5] + c.t[7] + s.dissipation0 + k * s.energy())
}

/// The split of 𝒢 = 𝒩_γ + 𝒟₀ + K̃𝓔 used for the convexity argument.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConvexityComponents {
    /// 𝒢₁ … 𝒢₇.
    pub g: [f64; 7],
    pub h: f64,
    /// 𝒢 − Σ𝒢ⱼ − ℋ, from the assembled 𝒢.
    pub remainder: f64,
    /// The same remainder from its explicit expression.
    pub remainder_formula: f64,
    /// 𝒢 assembled directly.
    pub total: f64,
}

impl ConvexityComponents {
    /// 𝒢₁ … 𝒢₅ and ℋ, the parts shown nonnegative.
    pub fn nonnegative_parts(&self) -> [f64; 6] {
        [self.g[0], self.g[1], self.g[2], self.g[3], self.g[4], self.h]
    }
}

pub fn convexity_components(s: &Prepared, t: &TestPair, p: &MaterialParams) -> Result<ConvexityComponents> {
    let mu = p.korn_mu()?;
    let kappa = p.kappa();
    let m = p.third_derivative_bound();
    let n = &t.norms;
    let c = s.coupling(t, p);
    let kt = weight_construct(n, p)?;
    let (kin, se_k, se_phi, gsq) = (s.kinetic, s.stored_kappa, s.stored, s.grad_sq);
    let g = [
        c.t[0] + 0.25 * mu * gsq + 2.0 * p.rho / mu * n.psi.powi(2) * kin,
        c.t[1] + 2.0 * n.grad_psi * kin,
        c.t[5] + 0.25 * mu * gsq + 2.0 / (kappa * mu) * n.cap.powi(2) * se_k,
        c.t[6] + n.grad_cap / p.rho * kin + n.grad_cap / kappa * se_k,
        c.t[7] + 0.5 * mu * gsq + 4.0 / (kappa * mu) * n.cap.powi(2) * se_k,
        c.t[2] + m / kappa * n.grad_psi * se_k,
        c.t[3] + n.div_psi * se_phi,
    ];
    let h = s.dissipation0 - mu * gsq;
    let total = c.total() + s.dissipation0 + kt * s.energy();
    let remainder = total - g.iter().sum::<f64>() - h;
    let remainder_formula = c.t[4] + c.t[8] + c.t[9]
        + (kt - 2.0 * p.rho / mu * n.psi.powi(2) - 2.0 * n.grad_psi - n.grad_cap / p.rho) * kin
        + (kt - n.div_psi) * se_phi
        - (6.0 / (kappa * mu) * n.cap.powi(2) + n.grad_cap / kappa + m / kappa * n.grad_psi) * se_k;
    Ok(ConvexityComponents { g, h, remainder, remainder_formula, total })
}

/// Right-hand sides of the lower estimate for ℱⁿ_τ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBounds {
    /// The estimate as printed, with −D(v):Ψ and without the linear stress term.
    pub literal: ExtReal,
    /// The estimate implied by the convexity split: +D(v):Ψ and the linear
    /// term −Dφ(E):∇ψ retained.
    pub corrected: ExtReal,
}

pub fn f_lower_bounds(
    mesh: &Mesh,
    p: &MaterialParams,
    s: &Prepared,
    prev: &Prepared,
    t: &TestPair,
    tau: f64,
    load: &Load,
) -> Result<LowerBounds> {
    let parts = f_step_prepared(mesh, p, s, prev, t, tau, load);
    let kt = weight_construct(&t.norms, p)?;
    let (ps, pt) = match (parts.p_state, parts.p_test) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a, b),
        _ => return Ok(LowerBounds { literal: ExtReal::PlusInf, corrected: ExtReal::PlusInf }),
    };
    let zero = TestPair::zero(mesh);
    let load_v = f_step_prepared(mesh, p, s, prev, &zero, tau, load).forcing;
    let load_psi = load_v - parts.forcing;
    let c = parts.coupling;
    let common = (1.0 - tau * kt) * s.energy() - prev.energy()
        + parts.kinetic_cross
        + parts.strain_cross
        + tau * (s.diffusion - load_v + ps - pt);
    let literal = common + tau * (c.t[4] + load_psi - c.t[8] + c.t[9]);
    let m = p.third_derivative_bound();
    let g6 = c.t[2] + m / p.kappa() * t.norms.grad_psi * s.stored_kappa;
    let corrected = common + tau * (c.t[4] + load_psi + c.t[8] + c.t[9] + g6);
    Ok(LowerBounds { literal: ExtReal::Finite(literal), corrected: ExtReal::Finite(corrected) })
}

/// Tolerance scale 1 + Σ|values| + Σ energies.
pub fn scale(values: &[f64], energies: &[f64]) -> f64 {
    1.0 + values.iter().map(|v| v.abs()).sum::<f64>() + energies.iter().sum::<f64>()
}
