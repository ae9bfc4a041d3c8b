//! Backward-Euler incremental scheme, energy ledger and trajectories.

mod io;
pub mod mms;
pub mod scenarios;

pub use io::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use scenarios::{Scenario, ScenarioId, ScenarioSpec};

use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use rayon::prelude::*;

use crate::discretization::{assemble, cg, Mesh, OperatorSet, SparseOperator, TensorField, VectorField};
use crate::error::{Error, Result};
use crate::functionals::{load_vector, Forcing, Load, Prepared, State, TestPair};
use crate::potentials::{dissipation, dphi, phi, DissipationModel, DissipationPotential, MaterialParams};
use crate::tensors::{bracket, sym_skew, SymTensor3};

/// Solver tolerances and iteration caps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub picard_max: usize,
    pub picard_tol: f64,
    pub admm_max: usize,
    pub admm_tol: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { picard_max: 50, picard_tol: 1e-9, admm_max: 2000, admm_tol: 1e-9, cg_tol: 1e-11, cg_max: 20_000 }
    }
}

/// Solver diagnostics of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepCertificate {
    pub picard_iters: usize,
    pub admm_iters: usize,
    pub cg_iters: usize,
    /// τ·(‖momentum residual‖₁ + ‖strain residual‖₁), dual norms.
    pub residual: f64,
    /// 1 + 𝓔(prev) + 𝓔(new).
    pub residual_scale: f64,
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: State,
    /// Nodal multiplier Ξ ∈ ∂P(dev Dφ(E)).
    pub xi: TensorField,
    pub cert: StepCertificate,
}

/// Linear solver for `(a·M + b·L) x = rhs` with lumped M and scalar Laplacian L.
struct ScalarSolve {
    diag: Vec<f64>,
    chol: Option<CscCholesky<f64>>,
}

impl ScalarSolve {
    fn new(mass: &[f64], a: &[f64], laplace: &SparseOperator, b: f64) -> Result<Self> {
        let diag: Vec<f64> = mass.iter().zip(a).map(|(m, a)| m * a).collect();
        if b == 0.0 {
            return Ok(ScalarSolve { diag, chol: None });
        }
        let n = mass.len();
        let mut coo = CooMatrix::new(n, n);
        for (i, j, v) in laplace.mat.triplet_iter() {
            coo.push(i, j, b * v);
        }
        for (i, d) in diag.iter().enumerate() {
            coo.push(i, i, *d);
        }
        let chol = CscCholesky::factor(&CscMatrix::from(&coo))
            .map_err(|e| Error::Convergence(format!("strain operator factorization failed: {e:?}")))?;
        Ok(ScalarSolve { diag, chol: Some(chol) })
    }

    /// Solve for `cols` right-hand sides stored node-major in `rhs`.
    fn solve(&self, rhs: &[f64], cols: usize) -> Vec<f64> {
        let n = self.diag.len();
        match &self.chol {
            None => rhs.iter().enumerate().map(|(k, r)| r / self.diag[k / cols]).collect(),
            Some(ch) => {
                let b = DMatrix::from_fn(n, cols, |i, c| rhs[i * cols + c]);
                let x = ch.solve(&b);
                let mut out = vec![0.0; n * cols];
                for i in 0..n {
                    for c in 0..cols {
                        out[i * cols + c] = x[(i, c)];
                    }
                }
                out
            }
        }
    }
}

/// One solver instance for fixed mesh, parameters and step size.
pub struct Stepper {
    pub mesh: Mesh,
    pub params: MaterialParams,
    pub tau: f64,
    pub opts: SolverOptions,
    pub ops: OperatorSet,
    momentum: SparseOperator,
    trace_solve: ScalarSolve,
    dev_solve: ScalarSolve,
}

/// Element-local residual contributions.
struct Duals {
    /// c(v; v, ·) − ∫ (Dφ(E) + φ(E)I):∇(·), per velocity dof.
    momentum: Vec<f64>,
    /// Tensor duals of ∫ (div v)E:Ψ + (v·∇Ψ):E − (EW−WE):Ψ + D(v):Ψ.
    strain: Vec<SymTensor3>,
}

impl Stepper {
    pub fn new(mesh: &Mesh, p: &MaterialParams, tau: f64, opts: SolverOptions) -> Result<Self> {
        let p = p.validated()?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("time step must be > 0, got {tau}")));
        }
        let ops = assemble(mesh, &p);
        let momentum = ops.mass_v.combine(p.rho / tau, &ops.visc, 1.0).eliminate(mesh.fixed_dofs());
        let m = mesh.lumped_mass();
        let n = mesh.nodes();
        let trace_solve = ScalarSolve::new(m, &vec![1.0 / tau; n], &ops.laplace, p.gamma * p.bulk)?;
        let a_dev = match (p.dissipation, p.gamma > 0.0) {
            (DissipationModel::Yield, true) => 2.0 / tau,
            (DissipationModel::Viscous, _) => 1.0 / tau + p.nu * p.shear,
            _ => 1.0 / tau,
        };
        let dev_solve = ScalarSolve::new(m, &vec![a_dev; n], &ops.laplace, p.gamma * p.shear)?;
        Ok(Stepper { mesh: mesh.clone(), params: p, tau, opts, ops, momentum, trace_solve, dev_solve })
    }

    fn duals(&self, v: &VectorField, e: &TensorField) -> Duals {
        let mesh = &self.mesh;
        let p = &self.params;
        let q = mesh.gauss2();
        let local: Vec<([f64; 8], [SymTensor3; 4])> = (0..mesh.elements())
            .into_par_iter()
            .map(|el| {
                let nodes = mesh.element_nodes(el);
                let mut mom = [0.0; 8];
                let mut st = [SymTensor3::ZERO; 4];
                for g in &q {
                    let b = &g.basis;
                    let vp = v.eval(&nodes, b);
                    let ep = e.eval(&nodes, b).value;
                    let (d, w) = sym_skew(vp.grad);
                    let div = vp.div();
                    let sigma = dphi(ep, p) + SymTensor3::IDENTITY * phi(ep, p);
                    let sm = sigma.to_matrix();
                    let rot = bracket(ep, w);
                    for a in 0..4 {
                        let adv = vp.v[0] * b.dx[a] + vp.v[1] * b.dy[a];
                        for dd in 0..2 {
                            let conv = 0.5 * p.rho * div * vp.v[dd] * b.n[a] + p.rho * vp.v[dd] * adv;
                            let stress = sm[dd][0] * b.dx[a] + sm[dd][1] * b.dy[a];
                            mom[2 * a + dd] += g.weight * (conv - stress);
                        }
                        st[a] += (ep * (div * b.n[a] + adv) - rot * b.n[a] + d * b.n[a]) * g.weight;
                    }
                }
                (mom, st)
            })
            .collect();
        let mut momentum = vec![0.0; 2 * mesh.nodes()];
        let mut strain = vec![SymTensor3::ZERO; mesh.nodes()];
        for (el, (mom, st)) in local.iter().enumerate() {
            let nodes = mesh.element_nodes(el);
            for a in 0..4 {
                momentum[2 * nodes[a]] += mom[2 * a];
                momentum[2 * nodes[a] + 1] += mom[2 * a + 1];
                strain[nodes[a]] += st[a];
            }
        }
        Duals { momentum, strain }
    }

    /// γ Σ_j L_ij Dφ(E_j) as nodal tensors.
    fn diffusion(&self, e: &TensorField) -> Vec<SymTensor3> {
        let n = self.mesh.nodes();
        if self.params.gamma == 0.0 {
            return vec![SymTensor3::ZERO; n];
        }
        let ke = e.map(|x| dphi(x, &self.params));
        let mut out = vec![SymTensor3::ZERO; n];
        for (i, j, l) in self.ops.laplace.mat.triplet_iter() {
            out[i] += ke.get(j) * (self.params.gamma * l);
        }
        out
    }

    /// Strain update with lagged transport; returns (E, Ξ, ADMM iterations).
    fn strain_solve(
        &self,
        prev: &State,
        lagged: &[SymTensor3],
        load: &Load,
        warm_e: &TensorField,
        warm_xi: &TensorField,
        admm_tol: f64,
    ) -> Result<(TensorField, TensorField, usize)> {
        let p = &self.params;
        let tau = self.tau;
        let g = p.shear;
        let n = self.mesh.nodes();
        let m = self.mesh.lumped_mass();
        let pot = dissipation(p);
        // b_i = E_prev/τ + (X_i + g_i)/m_i, the right side per unit mass.
        let b: Vec<SymTensor3> = (0..n)
            .map(|i| {
                let src = load.g.as_ref().map(|f| f.get(i)).unwrap_or(SymTensor3::ZERO);
                prev.e.get(i) * (1.0 / tau) + (lagged[i] + src) * (1.0 / m[i])
            })
            .collect();
        let mut e = TensorField::zeros(n);
        let mut xi = TensorField::zeros(n);
        if p.gamma == 0.0 {
            for i in 0..n {
                let etr = b[i] * tau;
                let x = etr.dev() * g;
                let z = pot.resolvent(x, tau * g);
                xi.set(i, (x - z) * (1.0 / (tau * g)));
                e.set(i, etr.sph() + z * (1.0 / g));
            }
            return Ok((e, xi, 0));
        }
        let tr_rhs: Vec<f64> = (0..n).map(|i| m[i] * b[i].trace()).collect();
        let tr = self.trace_solve.solve(&tr_rhs, 1);
        let sph = |i: usize| SymTensor3::IDENTITY * (tr[i] / 3.0);
        if p.dissipation != DissipationModel::Yield {
            let rhs: Vec<f64> = (0..n).flat_map(|i| (b[i].dev() * m[i]).to_array()).collect();
            let d = self.dev_solve.solve(&rhs, 6);
            for i in 0..n {
                let dev = SymTensor3::from_array(d[6 * i..6 * i + 6].try_into().unwrap());
                e.set(i, sph(i) + dev);
                if p.dissipation == DissipationModel::Viscous {
                    xi.set(i, dev * (p.nu * g));
                }
            }
            return Ok((e, xi, 0));
        }
        // ADMM for min_D G[m|D|²/(2τ) + γG DᵀLD/2 − m dev b·D] + m P(GD), split as
        // Z = GD with per-node penalty m_i/(τG): the Z-step is the resolvent with
        // parameter τG and Ξ = U/(τG).
        let lam = tau * g;
        let mut z: Vec<SymTensor3> = (0..n).map(|i| pot.resolvent(warm_e.get(i).dev() * g, lam)).collect();
        let mut u: Vec<SymTensor3> = (0..n).map(|i| warm_xi.get(i) * lam).collect();
        let mut d = vec![SymTensor3::ZERO; n];
        let mut iters = 0;
        let mut converged = false;
        while iters < self.opts.admm_max {
            iters += 1;
            let rhs: Vec<f64> = (0..n)
                .flat_map(|i| ((b[i].dev() + (z[i] - u[i]) * (1.0 / (tau * g))) * m[i]).to_array())
                .collect();
            let sol = self.dev_solve.solve(&rhs, 6);
            let (mut r2, mut s2, mut zn, mut un) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                d[i] = SymTensor3::from_array(sol[6 * i..6 * i + 6].try_into().unwrap());
                let x = d[i] * g + u[i];
                let zi = pot.resolvent(x, lam);
                s2 += m[i] * (zi - z[i]).norm_sq();
                z[i] = zi;
                u[i] = x - zi;
                r2 += m[i] * (d[i] * g - zi).norm_sq();
                zn += m[i] * zi.norm_sq();
                un += m[i] * u[i].norm_sq();
            }
            let tol = admm_tol;
            if r2.sqrt() <= tol * (1.0 + zn.sqrt()) && s2.sqrt() <= tol * (1.0 + un.sqrt()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence(format!("ADMM did not converge in {} iterations", self.opts.admm_max)));
        }
        for i in 0..n {
            e.set(i, sph(i) + z[i] * (1.0 / g));
            xi.set(i, u[i] * (1.0 / lam));
        }
        Ok((e, xi, iters))
    }

    /// Right side of the momentum system for lagged convection.
    fn momentum_rhs(&self, prev: &State, duals: &[f64], load: &Load) -> Vec<f64> {
        let mv = self.ops.mass_v.apply(&prev.v.data);
        let c = self.params.rho / self.tau;
        let fixed = self.mesh.fixed_dofs();
        (0..mv.len()).map(|k| if fixed[k] { 0.0 } else { c * mv[k] + duals[k] + load.f.data[k] }).collect()
    }

    /// Full nonlinear residual, τ-scaled dual ℓ¹ norm.
    pub fn residual(&self, prev: &State, s: &State, xi: &TensorField, load: &Load) -> f64 {
        self.residual_with(prev, s, xi, load, &self.duals(&s.v, &s.e))
    }

    fn residual_with(&self, prev: &State, s: &State, xi: &TensorField, load: &Load, du: &Duals) -> f64 {
        let tau = self.tau;
        let p = &self.params;
        let mut dv = s.v.clone();
        dv.axpy(-1.0, &prev.v);
        let mv = self.ops.mass_v.apply(&dv.data);
        let sv = self.ops.visc.apply(&s.v.data);
        let fixed = self.mesh.fixed_dofs();
        let mut r_mom = 0.0;
        for k in 0..mv.len() {
            if !fixed[k] {
                r_mom += (p.rho * mv[k] / tau + sv[k] - du.momentum[k] - load.f.data[k]).abs();
            }
        }
        let diff = self.diffusion(&s.e);
        let m = self.mesh.lumped_mass();
        let mut r_str = 0.0;
        for i in 0..self.mesh.nodes() {
            let src = load.g.as_ref().map(|f| f.get(i)).unwrap_or(SymTensor3::ZERO);
            let r = (s.e.get(i) - prev.e.get(i)) * (m[i] / tau) + diff[i] + xi.get(i) * m[i] - du.strain[i] - src;
            r_str += r.norm();
        }
        tau * (r_mom + r_str)
    }

    /// Advance one step from `prev` with multiplier warm start `prev_xi`.
    pub fn step(&self, prev: &State, prev_xi: &TensorField, load: &Load) -> Result<StepOutput> {
        prev.check(&self.mesh)?;
        let mut s = prev.clone();
        let mut xi = prev_xi.clone();
        let mut cert = StepCertificate::default();
        let e_prev = Prepared::new(&self.mesh, &self.params, prev).energy();
        let mut lagged = self.duals(&s.v, &s.e);
        // Inner ADMM accuracy follows the outer residual so that it never limits it.
        let mut admm_tol = self.opts.admm_tol;
        for sweep in 1..=self.opts.picard_max {
            let (e_new, xi_new, admm) = self.strain_solve(prev, &lagged.strain, load, &s.e, &xi, admm_tol)?;
            cert.admm_iters += admm;
            let mom_duals = self.duals(&s.v, &e_new).momentum;
            let rhs = self.momentum_rhs(prev, &mom_duals, load);
            let mut v = s.v.clone();
            let out = cg(&self.momentum, &rhs, &mut v.data, self.opts.cg_tol, self.opts.cg_max)?;
            cert.cg_iters += out.iterations;
            s = State { v, e: e_new };
            xi = xi_new;
            cert.picard_iters = sweep;
            lagged = self.duals(&s.v, &s.e);
            cert.residual_scale = 1.0 + e_prev + Prepared::new(&self.mesh, &self.params, &s).energy();
            cert.residual = self.residual_with(prev, &s, &xi, load, &lagged);
            if !cert.residual.is_finite() {
                return Err(Error::Solver { step: 0, reason: "residual is not finite".into() });
            }
            if cert.residual <= self.opts.picard_tol * cert.residual_scale {
                return Ok(StepOutput { state: s, xi, cert });
            }
            admm_tol = (0.1 * cert.residual / cert.residual_scale).clamp(1e-14, self.opts.admm_tol);
        }
        Err(Error::Solver {
            step: 0,
            reason: format!(
                "Picard iteration did not converge in {} sweeps (residual {:e}, target {:e})",
                self.opts.picard_max,
                cert.residual,
                self.opts.picard_tol * cert.residual_scale
            ),
        })
    }
}

/// Piecewise-constant trajectory (v⁰, E⁰), …, (v^N, E^N).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub tau: f64,
    pub states: Vec<State>,
    pub xi: Vec<TensorField>,
    /// Loads of the intervals; entry 0 is unused and zero.
    pub loads: Vec<Load>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    /// Index n with t ∈ (t^{n−1}, t^n]; t ∈ (−τ, 0] maps to 0.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let end = self.tau * self.steps() as f64;
        if t <= -self.tau || t > end * (1.0 + 1e-14) {
            return Err(Error::Contract(format!("time {t} outside (−τ, T]")));
        }
        if t <= 0.0 {
            return Ok(0);
        }
        let n = (t / self.tau * (1.0 - 1e-14)).ceil() as usize;
        Ok(n.clamp(1, self.steps()))
    }

    pub fn at(&self, t: f64) -> Result<&State> {
        Ok(&self.states[self.index_at(t)?])
    }
}

/// One row of the energy ledger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// 𝒫(dev Dφ(Eⁿ)); +∞ when infeasible.
    pub p_term: f64,
    /// ℬⁿ(vⁿ).
    pub forcing_power: f64,
    /// 𝓔ⁿ − 𝓔ⁿ⁻¹ + τ(𝒟ⁿ + 𝒫ⁿ − ℬⁿ(vⁿ)).
    pub ineq_residual: f64,
    pub picard_iters: usize,
    pub admm_iters: usize,
    /// Worst ℱⁿ_τ over the dictionary, filled by certification.
    pub cert_worst_f: f64,
    /// Auxiliary energy E, equal to 𝓔 on (0, T] for the discrete solution.
    pub aux_energy: f64,
    /// 𝓔⁰ − Σ_{k≤n} τ(𝒟ᵏ + 𝒫ᵏ − ℬᵏ), the energy the ledger would predict.
    pub ledger_energy: f64,
    pub f_l2_sq: f64,
    pub f_l2_time_integral: f64,
}

impl LedgerRow {
    /// E − 𝓔.
    pub fn defect(&self) -> f64 {
        self.aux_energy - self.energy
    }

    /// Cumulative numerical dissipation −Σ rᵏ.
    pub fn numerical_dissipation(&self) -> f64 {
        self.ledger_energy - self.energy
    }
}

/// Per-step energies, dissipations and residuals.
#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    pub tau: f64,
    pub params: MaterialParams,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    /// Ledger of a trajectory, recomputed from its states.
    pub fn from_trajectory(mesh: &Mesh, p: &MaterialParams, traj: &Trajectory) -> Self {
        let prepared: Vec<Prepared> = traj.states.par_iter().map(|s| Prepared::new(mesh, p, s)).collect();
        let mut ledger = EnergyLedger { tau: traj.tau, params: *p, rows: Vec::with_capacity(prepared.len()) };
        for (n, pr) in prepared.iter().enumerate() {
            let ke = crate::functionals::stress_field(p, &pr.state.e);
            let row = if n == 0 {
                LedgerRow {
                    step: 0,
                    time: 0.0,
                    energy: pr.energy(),
                    dissipation: pr.dissipation(),
                    p_term: pr.p_term.to_f64(),
                    forcing_power: 0.0,
                    ineq_residual: 0.0,
                    picard_iters: 0,
                    admm_iters: 0,
                    cert_worst_f: f64::NAN,
                    aux_energy: pr.energy(),
                    ledger_energy: pr.energy(),
                    f_l2_sq: 0.0,
                    f_l2_time_integral: 0.0,
                }
            } else {
                let prev = ledger.rows[n - 1];
                let load = &traj.loads[n];
                let b = load.pair(&pr.state.v, &ke);
                let tau = traj.tau;
                let rate = pr.dissipation() + pr.p_term.to_f64() - b;
                LedgerRow {
                    step: n,
                    time: n as f64 * tau,
                    energy: pr.energy(),
                    dissipation: pr.dissipation(),
                    p_term: pr.p_term.to_f64(),
                    forcing_power: b,
                    ineq_residual: pr.energy() - prev.energy + tau * rate,
                    picard_iters: 0,
                    admm_iters: 0,
                    cert_worst_f: f64::NAN,
                    aux_energy: pr.energy(),
                    ledger_energy: prev.ledger_energy - tau * rate,
                    f_l2_sq: load.f_l2_sq,
                    f_l2_time_integral: load.f_l2_time_integral,
                }
            };
            ledger.rows.push(row);
        }
        ledger
    }

    /// Right side of the Gronwall estimate at step n.
    pub fn gronwall_bound(&self, n: usize) -> f64 {
        let mut acc = self.rows[0].energy;
        for r in &self.rows[1..=n] {
            acc += self.tau * r.f_l2_sq / (2.0 * self.params.rho);
        }
        acc * (1.0 - self.tau).powi(-(n as i32))
    }

    pub fn max_energy(&self) -> f64 {
        self.rows.iter().map(|r| r.energy).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Σ τ 𝒟ⁿ over n ≥ 1.
    pub fn total_dissipation(&self) -> f64 {
        self.rows.iter().skip(1).map(|r| self.tau * r.dissipation).sum()
    }

    /// Σ τ 𝒫ⁿ over n ≥ 1.
    pub fn total_p(&self) -> f64 {
        self.rows.iter().skip(1).map(|r| self.tau * r.p_term).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "step,time,energy,dissipation,P_term,forcing_power,ineq_residual,picard_iters,admm_iters,cert_worst_F\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{:.17e}\n",
                r.step,
                r.time,
                r.energy,
                r.dissipation,
                r.p_term,
                r.forcing_power,
                r.ineq_residual,
                r.picard_iters,
                r.admm_iters,
                r.cert_worst_f
            ));
        }
        s
    }

    /// Energy-defect table: step, time, energy, E, E − 𝓔, ledger energy, numerical dissipation.
    pub fn defect_csv(&self) -> String {
        let mut s = String::from("step,time,energy,aux_energy,defect,ledger_energy,numerical_dissipation\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r.step,
                r.time,
                r.energy,
                r.aux_energy,
                r.defect(),
                r.ledger_energy,
                r.numerical_dissipation()
            ));
        }
        s
    }
}

/// A run that stopped early, with what was computed so far.
#[derive(Debug)]
pub struct RunFailure {
    pub trajectory: Trajectory,
    pub ledger: EnergyLedger,
    pub error: Error,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run stopped after {} steps: {}", self.trajectory.steps(), self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Run a scenario to its horizon.
pub fn run(sc: &Scenario) -> std::result::Result<(Trajectory, EnergyLedger), Box<RunFailure>> {
    let tau = sc.tau();
    let empty = |e: Error| {
        Box::new(RunFailure {
            trajectory: Trajectory { tau, states: vec![sc.initial.clone()], xi: vec![], loads: vec![] },
            ledger: EnergyLedger::default(),
            error: e,
        })
    };
    let stepper = Stepper::new(&sc.mesh, &sc.params, tau, sc.opts).map_err(empty)?;
    run_with(&stepper, &sc.initial, sc.forcing.clone(), sc.steps)
}

/// Run `steps` steps of an existing stepper.
pub fn run_with(
    stepper: &Stepper,
    initial: &State,
    forcing: Arc<dyn Forcing>,
    steps: usize,
) -> std::result::Result<(Trajectory, EnergyLedger), Box<RunFailure>> {
    let mesh = &stepper.mesh;
    let tau = stepper.tau;
    let mut traj = Trajectory {
        tau,
        states: vec![initial.clone()],
        xi: vec![TensorField::zeros(mesh.nodes())],
        loads: vec![Load::zero(mesh.nodes())],
    };
    let mut certs = vec![StepCertificate::default()];
    for n in 1..=steps {
        let load = load_vector(mesh, forcing.as_ref(), (n - 1) as f64 * tau, n as f64 * tau);
        let prev = traj.states.last().unwrap();
        let prev_xi = traj.xi.last().unwrap();
        match stepper.step(prev, prev_xi, &load) {
            Ok(out) => {
                traj.states.push(out.state);
                traj.xi.push(out.xi);
                traj.loads.push(load);
                certs.push(out.cert);
            }
            Err(e) => {
                let e = match e {
                    Error::Solver { reason, .. } => Error::Solver { step: n, reason },
                    other => Error::Solver { step: n, reason: other.to_string() },
                };
                let ledger = ledger_with_certs(stepper, &traj, &certs);
                return Err(Box::new(RunFailure { trajectory: traj, ledger, error: e }));
            }
        }
    }
    let ledger = ledger_with_certs(stepper, &traj, &certs);
    Ok((traj, ledger))
}

fn ledger_with_certs(stepper: &Stepper, traj: &Trajectory, certs: &[StepCertificate]) -> EnergyLedger {
    let mut ledger = EnergyLedger::from_trajectory(&stepper.mesh, &stepper.params, traj);
    for (row, c) in ledger.rows.iter_mut().zip(certs) {
        row.picard_iters = c.picard_iters;
        row.admm_iters = c.admm_iters;
    }
    ledger
}

/// Dictionary surrogates of the increment dual norms.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementNorms {
    /// sup_ψ |∫ (vⁿ − vⁿ⁻¹)·ψ| per step n = 1..N.
    pub velocity: Vec<f64>,
    /// sup_Ψ |∫ (Eⁿ − Eⁿ⁻¹):Ψ| per step.
    pub strain: Vec<f64>,
    /// Σ_{n≥2} τ·velocity[n], the L¹(τ, T) norm of the shifted difference.
    pub velocity_sum: f64,
    /// Σ_{n≥2} τ·strain[n].
    pub strain_sum: f64,
}

/// Per-step dictionary dual norms of the increments, with each entry
/// normalized to ‖ψ‖_∞ + ‖∇ψ‖_∞ = 1 and ‖Ψ‖_∞ + ‖∇Ψ‖_∞ = 1.
pub fn increment_dual_norms(mesh: &Mesh, traj: &Trajectory, dict: &[TestPair]) -> Result<IncrementNorms> {
    if dict.is_empty() {
        return Err(Error::Config("increment norms need a nonempty dictionary".into()));
    }
    let mv = assemble(mesh, &MaterialParams::default()).mass_v;
    let psi: Vec<Vec<f64>> = dict
        .iter()
        .filter(|t| t.norms.psi + t.norms.grad_psi > 0.0)
        .map(|t| t.psi.scaled(1.0 / (t.norms.psi + t.norms.grad_psi)).data)
        .collect();
    let caps: Vec<TensorField> = dict
        .iter()
        .filter(|t| t.norms.cap + t.norms.grad_cap > 0.0)
        .map(|t| t.cap.scaled(1.0 / (t.norms.cap + t.norms.grad_cap)))
        .collect();
    let mut out = IncrementNorms { velocity: vec![], strain: vec![], velocity_sum: 0.0, strain_sum: 0.0 };
    for n in 1..traj.states.len() {
        let mut dv = traj.states[n].v.clone();
        dv.axpy(-1.0, &traj.states[n - 1].v);
        let mdv = mv.apply(&dv.data);
        let sv = psi.iter().map(|p| p.iter().zip(&mdv).map(|(a, b)| a * b).sum::<f64>().abs()).fold(0.0, f64::max);
        let mut de = traj.states[n].e.clone();
        de.axpy(-1.0, &traj.states[n - 1].e);
        let se = caps.iter().map(|c| crate::functionals::strain_product(mesh, &de, c).abs()).fold(0.0, f64::max);
        out.velocity.push(sv);
        out.strain.push(se);
        if n >= 2 {
            out.velocity_sum += traj.tau * sv;
            out.strain_sum += traj.tau * se;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
