//! Per-step and time-integrated certification of a computed trajectory.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{with_discrete_korn, CertReport, CheckResult, DictEntry, TestDictionary, Worst};
use crate::discretization::Mesh;
use crate::error::{Error, Result};
use crate::functionals::{f_step_prepared, weight_limit, Prepared, TestPair};
use crate::potentials::{dphi, fenchel_gap, DissipationModel, MaterialParams};
use crate::stepper::{EnergyLedger, Trajectory};

/// Default number of (s, t) samples.
pub const DEFAULT_SAMPLES: usize = 200;
/// Absolute tolerance of the node-wise yield constraint.
const YIELD_TOL: f64 = 1e-10;
/// Relative tolerance of the Gronwall bound.
const GRONWALL_TOL: f64 = 1e-8;
/// Relative agreement between two evaluations of the same quantity.
const IDENTITY_TOL: f64 = 1e-12;

/// ℱⁿ_τ(vⁿ, 𝔼ⁿ | ψ, Ψ) for every step and entry. Row 0 is the zero pair.
#[derive(Clone, Debug)]
pub struct StepTable {
    pub tau: f64,
    pub ids: Vec<String>,
    /// 𝒦 of each entry.
    pub limit_weight: Vec<f64>,
    /// values[e][n−1] = ℱⁿ for entry e.
    pub values: Vec<Vec<f64>>,
    /// Sum of the absolute values of the terms of ℱⁿ, for tolerance scales.
    pub magnitudes: Vec<Vec<f64>>,
    /// 𝓔ⁿ, n = 0..N.
    pub energy: Vec<f64>,
    pub steps: usize,
}

impl StepTable {
    pub fn compute(mesh: &Mesh, p: &MaterialParams, traj: &Trajectory, entries: &[&DictEntry]) -> Result<Self> {
        let p = with_discrete_korn(mesh, p)?;
        let n_steps = traj.steps();
        if traj.loads.len() != traj.states.len() {
            return Err(Error::Dimension(format!(
                "trajectory has {} states but {} loads",
                traj.states.len(),
                traj.loads.len()
            )));
        }
        let zero = TestPair::zero(mesh);
        let mut pairs: Vec<(&str, &TestPair)> = vec![("zero", &zero)];
        pairs.extend(entries.iter().map(|e| (e.id.as_str(), &e.pair)));
        let limit_weight = pairs.iter().map(|(_, t)| weight_limit(&t.norms, &p)).collect::<Result<Vec<_>>>()?;
        let per_step: Vec<(Vec<f64>, Vec<f64>, f64)> = (1..=n_steps)
            .into_par_iter()
            .map(|n| {
                let prev = Prepared::new(mesh, &p, &traj.states[n - 1]);
                let cur = Prepared::new(mesh, &p, &traj.states[n]);
                let mut vals = Vec::with_capacity(pairs.len());
                let mut mags = Vec::with_capacity(pairs.len());
                for (_, t) in &pairs {
                    let f = f_step_prepared(mesh, &p, &cur, &prev, t, traj.tau, &traj.loads[n]);
                    vals.push(f.total().to_f64());
                    let tau = traj.tau;
                    mags.push(
                        f.kinetic_cross.abs()
                            + f.strain_cross.abs()
                            + tau
                                * (f.dissipation.abs()
                                    + f.p_state.to_f64().abs()
                                    + f.coupling.t.iter().map(|x| x.abs()).sum::<f64>()
                                    + f.p_test.to_f64().abs()
                                    + f.forcing.abs()),
                    );
                }
                (vals, mags, cur.energy())
            })
            .collect();
        let mut values = vec![Vec::with_capacity(n_steps); pairs.len()];
        let mut magnitudes = vec![Vec::with_capacity(n_steps); pairs.len()];
        let mut energy = vec![Prepared::new(mesh, &p, &traj.states[0]).energy()];
        for (vals, mags, e) in per_step {
            for (k, (v, m)) in vals.into_iter().zip(mags).enumerate() {
                values[k].push(v);
                magnitudes[k].push(m);
            }
            energy.push(e);
        }
        Ok(StepTable {
            tau: traj.tau,
            ids: pairs.iter().map(|(id, _)| id.to_string()).collect(),
            limit_weight,
            values,
            magnitudes,
            energy,
            steps: n_steps,
        })
    }

    fn prefix(v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len() + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for x in v {
            acc += x;
            out.push(acc);
        }
        out
    }
}

/// Sampled pairs (j, k), 0 ≤ j < k ≤ N, standing for (s, t) = (tʲ, tᵏ).
///
/// All pairs when there are at most `max`; otherwise pairs starting at 0,
/// pairs ending at N and single steps are kept on an even stride and the
/// rest is filled at random.
pub fn stratified_pairs(steps: usize, max: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = steps * (steps + 1) / 2;
    let mut set = BTreeSet::new();
    if total <= max {
        for j in 0..steps {
            for k in j + 1..=steps {
                set.insert((j, k));
            }
        }
        return set.into_iter().collect();
    }
    let stride = |count: usize, len: usize| -> Vec<usize> {
        let count = count.clamp(1, len);
        (0..count).map(|i| if count == 1 { 0 } else { i * (len - 1) / (count - 1) }).collect()
    };
    for k in stride(max / 4, steps) {
        set.insert((0, k + 1));
    }
    for j in stride(max / 4, steps) {
        set.insert((j, steps));
    }
    for j in stride(max / 8, steps) {
        set.insert((j, j + 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while set.len() < max {
        let j = rng.gen_range(0..steps);
        let k = rng.gen_range(j + 1..=steps);
        set.insert((j, k));
    }
    set.into_iter().take(max).collect()
}

fn step_scale(t: &StepTable, e: usize, n: usize) -> f64 {
    1.0 + t.energy[n] + t.energy[n - 1] + t.magnitudes[e][n - 1]
}

fn check_ledger(ledger: &EnergyLedger, traj: &Trajectory) -> Result<()> {
    if ledger.rows.len() != traj.states.len() {
        return Err(Error::Dimension(format!(
            "ledger has {} rows for {} states",
            ledger.rows.len(),
            traj.states.len()
        )));
    }
    Ok(())
}

fn steps_report(
    mesh: &Mesh,
    p: &MaterialParams,
    traj: &Trajectory,
    ledger: &mut EnergyLedger,
    table: &StepTable,
    tol: f64,
) -> CertReport {
    let mut report = CertReport::default();
    let mut worst = Worst::default();
    let mut energy = Worst::default();
    let mut consistency = Worst::default();
    for n in 1..=table.steps {
        let mut raw = f64::NEG_INFINITY;
        for e in 0..table.ids.len() {
            let v = table.values[e][n - 1];
            raw = raw.max(v);
            worst.offer(v / step_scale(table, e, n), Some(n), Some(&table.ids[e]));
        }
        ledger.rows[n].cert_worst_f = raw;
        let s0 = step_scale(table, 0, n);
        energy.offer(ledger.rows[n].ineq_residual / s0, Some(n), None);
        consistency.offer((table.values[0][n - 1] - ledger.rows[n].ineq_residual).abs() / s0, Some(n), None);
    }
    report.push(worst.check("step_inequality", tol).detail(format!("{} entries incl. zero", table.ids.len())));
    report.push(energy.check("energy_inequality", tol));
    report.push(consistency.check("ledger_consistency", IDENTITY_TOL));

    let mut gron = Worst::default();
    let mut mono = Worst::default();
    let unforced = traj.loads.iter().all(|l| l.f_l2_sq == 0.0 && l.f.max_abs() == 0.0 && l.g.is_none());
    for n in 1..=table.steps {
        let r = &ledger.rows[n];
        let scale = 1.0 + r.energy + ledger.rows[n - 1].energy;
        if ledger.tau < 1.0 {
            gron.offer((r.energy - ledger.gronwall_bound(n)) / scale, Some(n), None);
        }
        mono.offer((r.energy - ledger.rows[n - 1].energy) / scale, Some(n), None);
    }
    report.push(gron.check("gronwall_bound", GRONWALL_TOL));
    if unforced {
        report.push(mono.check("energy_monotone", tol));
    }

    if p.dissipation == DissipationModel::Yield {
        let per_step: Vec<Worst> = (1..traj.states.len())
            .into_par_iter()
            .map(|n| {
                let mut w = Worst::default();
                for i in 0..mesh.nodes() {
                    let z = dphi(traj.states[n].e.get(i), p).dev();
                    w.offer(z.norm() - p.sigma_yield, Some(n), None);
                }
                w
            })
            .collect();
        let w = per_step.into_iter().fold(Worst::default(), Worst::merge);
        report.push(w.check("yield_feasibility", YIELD_TOL).detail("max |dev Dφ(E)| − σ_yield"));
    }
    if traj.xi.len() == traj.states.len() {
        let per_step: Vec<Worst> = (1..traj.states.len())
            .into_par_iter()
            .map(|n| {
                let mut w = Worst::default();
                for i in 0..mesh.nodes() {
                    let z = dphi(traj.states[n].e.get(i), p).dev();
                    let x = traj.xi[n].get(i);
                    let gap = fenchel_gap(z, x, p).map(|g| g.to_f64()).unwrap_or(f64::INFINITY);
                    w.offer(gap / (1.0 + z.norm() * x.norm()), Some(n), None);
                }
                w
            })
            .collect();
        let w = per_step.into_iter().fold(Worst::default(), Worst::merge);
        report.push(w.check("multiplier_fenchel", tol));
    }
    report
}

/// Weak-form values for sampled (s, t): Σ_{n=j+1}^k ℱⁿ, with an optional
/// right side per entry and sample.
fn integrated(
    table: &StepTable,
    pairs: &[(usize, usize)],
    tol: f64,
    name: &str,
    rhs: impl Fn(usize, usize, usize) -> (f64, f64) + Sync,
) -> CheckResult {
    let w = (0..table.ids.len())
        .into_par_iter()
        .map(|e| {
            let f = StepTable::prefix(&table.values[e]);
            let m = StepTable::prefix(&table.magnitudes[e]);
            let mut w = Worst::default();
            for &(j, k) in pairs {
                let (extra_lhs, r) = rhs(e, j, k);
                let lhs = f[k] - f[j] + extra_lhs;
                let scale = 1.0 + table.energy[j] + table.energy[k] + (m[k] - m[j]) + r.abs() + extra_lhs.abs();
                w.offer((lhs - r) / scale, Some(k), Some(&format!("{} from step {j}", table.ids[e])));
            }
            w
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Worst::default(), Worst::merge);
    w.check(name, tol).detail(format!("{} (s,t) samples", pairs.len()))
}

fn weak_report(table: &StepTable, ledger: &EnergyLedger, pairs: &[(usize, usize)], tol: f64) -> CertReport {
    let mut report = CertReport::default();
    report.push(integrated(table, pairs, tol, "weak_form", |_, _, _| (0.0, 0.0)));
    // (ψ, Ψ) = (0, 0), s = 0 against the cumulative ledger.
    let f = StepTable::prefix(&table.values[0]);
    let r = StepTable::prefix(&ledger.rows[1..].iter().map(|r| r.ineq_residual).collect::<Vec<_>>());
    let mut w = Worst::default();
    for k in 1..=table.steps {
        let scale = 1.0 + table.energy[0] + table.energy[k] + r[k].abs();
        w.offer((f[k] - r[k]).abs() / scale, Some(k), Some("zero"));
    }
    report.push(w.check("weak_ledger_identity", IDENTITY_TOL));
    report
}

fn envar_report(table: &StepTable, aux: &[f64], pairs: &[(usize, usize)], tol: f64) -> CertReport {
    let mut report = CertReport::default();
    let tau = table.tau;
    let defect: Vec<f64> = aux.iter().zip(&table.energy).map(|(a, e)| a - e).collect();
    // ∫_s^t (E − 𝓔) over the piecewise-constant prolongation.
    let cum = StepTable::prefix(&defect[1..].iter().map(|d| tau * d).collect::<Vec<_>>());
    report.push(integrated(table, pairs, tol, "envar_form", |e, j, k| {
        let lhs = defect[k] - defect[j];
        (lhs, table.limit_weight[e] * (cum[k] - cum[j]))
    }));
    let mut dom = Worst::default();
    for (n, d) in defect.iter().enumerate() {
        dom.offer(-d / (1.0 + table.energy[n]), Some(n), None);
    }
    report.push(dom.check("aux_energy_dominates", tol));
    let e0 = table.energy[0];
    let jump = table.energy.get(1).map(|e1| e1 - e0).unwrap_or(0.0);
    report.push(
        CheckResult::new("initial_aux_energy", (aux[0] - e0).abs() / (1.0 + e0), 1e-8)
            .at_step(Some(0))
            .detail(format!("E(0) vs E(v0,E0); first-step energy jump {jump:.3e}")),
    );
    report
}

/// Per-step certificate: ℱⁿ_τ ≤ tol·scale over all admissible entries,
/// plus the energy ledger, Gronwall, feasibility and multiplier checks.
/// Fills `cert_worst_f` of the ledger.
pub fn certify_steps(
    mesh: &Mesh,
    traj: &Trajectory,
    ledger: &mut EnergyLedger,
    dict: &TestDictionary,
    p: &MaterialParams,
    tol: f64,
) -> Result<CertReport> {
    check_ledger(ledger, traj)?;
    let entries = dict.admissible(traj.tau)?;
    let table = StepTable::compute(mesh, p, traj, &entries)?;
    Ok(steps_report(mesh, p, traj, ledger, &table, tol))
}

/// Time-integrated weak inequality over sampled (s, t) pairs.
#[allow(clippy::too_many_arguments)]
pub fn check_weak(
    mesh: &Mesh,
    traj: &Trajectory,
    ledger: &EnergyLedger,
    dict: &TestDictionary,
    p: &MaterialParams,
    tol: f64,
    samples: usize,
    seed: u64,
) -> Result<CertReport> {
    check_ledger(ledger, traj)?;
    if ledger.params.gamma != p.gamma {
        return Err(Error::Config(format!(
            "trajectory was computed with γ = {} but parameters have γ = {}",
            ledger.params.gamma, p.gamma
        )));
    }
    let entries = dict.admissible(traj.tau)?;
    let table = StepTable::compute(mesh, p, traj, &entries)?;
    Ok(weak_report(&table, ledger, &stratified_pairs(table.steps, samples, seed), tol))
}

/// Energy-variational inequality with weight 𝒦 over sampled (s, t) pairs.
/// `aux` overrides the auxiliary energy of the ledger.
#[allow(clippy::too_many_arguments)]
pub fn check_envar(
    mesh: &Mesh,
    traj: &Trajectory,
    ledger: &EnergyLedger,
    dict: &TestDictionary,
    p: &MaterialParams,
    tol: f64,
    samples: usize,
    seed: u64,
    aux: Option<&[f64]>,
) -> Result<CertReport> {
    check_ledger(ledger, traj)?;
    if p.gamma != 0.0 || ledger.params.gamma != 0.0 {
        return Err(Error::Config("the energy-variational check applies to γ = 0 trajectories only".into()));
    }
    let aux: Vec<f64> = match aux {
        Some(a) if a.len() != ledger.rows.len() => {
            return Err(Error::Dimension(format!("{} auxiliary energies for {} ledger rows", a.len(), ledger.rows.len())))
        }
        Some(a) => a.to_vec(),
        None => ledger.rows.iter().map(|r| r.aux_energy).collect(),
    };
    let entries = dict.admissible(traj.tau)?;
    let table = StepTable::compute(mesh, p, traj, &entries)?;
    Ok(envar_report(&table, &aux, &stratified_pairs(table.steps, samples, seed), tol))
}

/// All trajectory checks from a single evaluation of the step table. The
/// energy-variational part runs only for γ = 0.
#[allow(clippy::too_many_arguments)]
pub fn certify_all(
    mesh: &Mesh,
    traj: &Trajectory,
    ledger: &mut EnergyLedger,
    dict: &TestDictionary,
    p: &MaterialParams,
    tol: f64,
    envar_tol: f64,
    samples: usize,
    seed: u64,
) -> Result<CertReport> {
    check_ledger(ledger, traj)?;
    let entries = dict.admissible(traj.tau)?;
    let table = StepTable::compute(mesh, p, traj, &entries)?;
    let pairs = stratified_pairs(table.steps, samples, seed);
    let mut report = steps_report(mesh, p, traj, ledger, &table, tol);
    report.extend(weak_report(&table, ledger, &pairs, tol));
    if p.gamma == 0.0 {
        let aux: Vec<f64> = ledger.rows.iter().map(|r| r.aux_energy).collect();
        report.extend(envar_report(&table, &aux, &pairs, envar_tol));
    }
    Ok(report)
}
