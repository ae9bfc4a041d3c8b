//! Brute-force oracles for the dissipation potential and the stored energy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CertReport, Worst};
use crate::error::{Error, Result};
use crate::potentials::{dphi, p_conj, p_density, phi, phi_conj, resolvent_p, DissipationModel, ExtReal, MaterialParams};
use crate::tensors::SymTensor3;

const GRID: usize = 100_000;
const RESOLVENT_TOL: f64 = 1e-6;
const CONJ_TOL: f64 = 1e-6;
const PHI_TOL: f64 = 1e-12;
const GAP_TOL: f64 = 1e-12;
const PHI_SAMPLES: usize = 100;

/// Radial profile of P, written out from the model definition.
fn radial_p(r: f64, p: &MaterialParams) -> f64 {
    match p.dissipation {
        DissipationModel::Zero => 0.0,
        DissipationModel::Viscous => 0.5 * p.nu * r * r,
        DissipationModel::Yield if r <= p.sigma_yield => 0.5 * p.nu * r * r,
        DissipationModel::Yield => f64::INFINITY,
    }
}

/// Minimizer of a convex function on [0, hi]: grid scan, then golden section
/// on the bracketing cells.
fn minimize(h: impl Fn(f64) -> f64, hi: f64) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    let dx = hi / GRID as f64;
    let mut best = 0;
    let mut best_val = h(0.0);
    for k in 1..=GRID {
        let v = h(k as f64 * dx);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let mut a = best.saturating_sub(1) as f64 * dx;
    let mut b = ((best + 1).min(GRID)) as f64 * dx;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if h(c) <= h(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn random_direction(rng: &mut ChaCha8Rng) -> SymTensor3 {
    loop {
        let t = SymTensor3::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).dev();
        let n = t.norm();
        if n > 1e-3 {
            return t * (1.0 / n);
        }
    }
}

/// Compares the resolvent, P* and φ* against independent computations.
pub fn prox_oracle_suite(p: &MaterialParams, samples: usize, seed: u64) -> Result<CertReport> {
    let p = p.validated()?;
    if samples == 0 {
        return Err(Error::Config("prox oracle needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CertReport::default();
    let yield_model = p.dissipation == DissipationModel::Yield;

    let mut res = Worst::default();
    let (mut inside, mut projected) = (0usize, 0usize);
    for k in 0..samples {
        let lambda = rng.gen_range(0.1..2.0);
        let dir = random_direction(&mut rng);
        let reach = if yield_model { 2.5 * p.sigma_yield * (1.0 + lambda * p.nu) } else { 3.0 };
        let r = rng.gen_range(0.0..1.0) * reach;
        let x = dir * r;
        let oracle = minimize(|s| (s - r).powi(2) / (2.0 * lambda) + radial_p(s, &p), r);
        if yield_model && oracle >= p.sigma_yield * (1.0 - 1e-9) {
            projected += 1;
        } else {
            inside += 1;
        }
        let z = resolvent_p(x, lambda, &p)?;
        let err = (z - dir * oracle).norm() / (1.0 + r);
        res.offer(err, None, Some(&format!("sample{k}")));
    }
    let mut c = res.check("resolvent_oracle", RESOLVENT_TOL).detail(format!("{inside} interior, {projected} projected"));
    if yield_model && (inside == 0 || projected == 0) {
        c.pass = false;
        c.detail.push_str("; both branches must be sampled");
    }
    report.push(c);

    let mut conj = Worst::default();
    let mut gap = Worst::default();
    for k in 0..samples {
        let dir = random_direction(&mut rng);
        let r = rng.gen_range(0.0..3.0) * p.sigma_yield.clamp(1e-3, 1.0);
        let x = dir * r;
        let got = p_conj(x, &p)?;
        let id = format!("sample{k}");
        match p.dissipation {
            DissipationModel::Zero => {
                let ok = if r == 0.0 { got == ExtReal::Finite(0.0) } else { got == ExtReal::PlusInf };
                conj.offer(if ok { 0.0 } else { f64::INFINITY }, None, Some(&id));
            }
            _ => {
                let hi = if yield_model { p.sigma_yield } else { 2.0 * r / p.nu };
                let s = minimize(|s| radial_p(s, &p) - s * r, hi);
                let oracle = s * r - radial_p(s, &p);
                conj.offer((got.to_f64() - oracle).abs() / (1.0 + oracle.abs()), None, Some(&id));
            }
        }
        // Fenchel–Young on a feasible A.
        let ra = rng.gen_range(0.0..1.0) * if yield_model { p.sigma_yield } else { 1.0 };
        let a = random_direction(&mut rng) * ra;
        let pa = p_density(a, &p)?;
        let (pa, px) = (pa.to_f64(), got.to_f64());
        if pa.is_finite() && px.is_finite() {
            let g = pa + px - x.ddot(a);
            gap.offer(-g / (1.0 + pa.abs() + px.abs() + x.ddot(a).abs()), None, Some(&id));
        }
    }
    report.push(conj.check("p_conj_oracle", CONJ_TOL));
    report.push(gap.check("p_fenchel_young", GAP_TOL));

    let mut fen = Worst::default();
    for k in 0..PHI_SAMPLES {
        let e = SymTensor3::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let b = dphi(e, &p);
        let (f, fc, w) = (phi(e, &p), phi_conj(b, &p), b.ddot(e));
        fen.offer((f + fc - w).abs() / (1.0 + f.abs() + fc.abs() + w.abs()), None, Some(&format!("tensor{k}")));
    }
    report.push(fen.check("phi_fenchel_identity", PHI_TOL));
    Ok(report)
}
