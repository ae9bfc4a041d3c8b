//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines appear in plain
//! `cargo test` output. Exits nonzero when any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vepflow::discretization::{
    build_mesh, convection_operator, rotation_operator, BoundaryKind, BoundarySpec, TensorField, VectorField,
};
use vepflow::potentials::{dphi, MaterialParams};
use vepflow::stepper::scenarios::{shear_params, GAMMA_LEVELS};
use vepflow::stepper::{increment_dual_norms, run, EnergyLedger, ScenarioId, ScenarioSpec, Trajectory};
use vepflow::tensors::{jaumann_bracket, sym_skew, SymTensor3, Tensor3};
use vepflow::verify::{
    certify_steps, check_envar, convergence_study, convexity_suite, prox_oracle_suite, with_discrete_korn, CertReport,
    StudyMode, TestDictionary,
};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

/// A solved and certified shear_yield run.
struct ShearRun {
    mesh: vepflow::discretization::Mesh,
    params: MaterialParams,
    traj: Trajectory,
    ledger: EnergyLedger,
    dict: TestDictionary,
    steps_report: CertReport,
}

fn shear_run(gamma: f64, steps: usize) -> Result<ShearRun, Box<dyn std::error::Error>> {
    let mut spec = ScenarioSpec { steps, ..ScenarioSpec::new(ScenarioId::ShearYield) };
    spec.params.gamma = gamma;
    let sc = spec.build()?;
    let (traj, mut ledger) = run(&sc)?;
    let params = with_discrete_korn(&sc.mesh, &sc.params)?;
    let dict = TestDictionary::new(&sc.mesh, &params)?;
    let steps_report = certify_steps(&sc.mesh, &traj, &mut ledger, &dict, &params, 1e-7)?;
    Ok(ShearRun { mesh: sc.mesh, params, traj, ledger, dict, steps_report })
}

fn check(report: &CertReport, name: &str) -> (bool, String) {
    match report.get(name) {
        Some(c) => (c.pass, format!("{name} {:.3e} (tol {:.0e})", c.worst_value, c.tolerance)),
        None => (false, format!("{name} missing")),
    }
}

fn all(parts: &[(bool, String)]) -> (bool, String) {
    (parts.iter().all(|p| p.0), parts.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join("; "))
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo) / hi.abs()
}

fn criterion_1(prox: &CertReport) -> Outcome {
    let c = prox.get("resolvent_oracle").ok_or("resolvent_oracle missing")?;
    Ok((c.pass, format!("resolvent vs brute force {:.3e} (tol 1e-6), {}", c.worst_value, c.detail)))
}

fn criterion_2(prox: &CertReport) -> Outcome {
    Ok(all(&[check(prox, "phi_fenchel_identity"), check(prox, "p_fenchel_young"), check(prox, "p_conj_oracle")]))
}

fn criterion_3(runs: &[&ShearRun]) -> Outcome {
    let mut parts = Vec::new();
    for r in runs {
        let n = r.dict.admissible(r.traj.tau)?.len();
        let (pass, text) = check(&r.steps_report, "step_inequality");
        parts.push((pass && n == 96, format!("gamma {}: {text}, {n} admissible entries", r.params.gamma)));
    }
    Ok(all(&parts))
}

fn criterion_4(runs: &[&ShearRun]) -> Outcome {
    let mut parts = Vec::new();
    for r in runs {
        let (a, ta) = check(&r.steps_report, "energy_inequality");
        let (b, tb) = check(&r.steps_report, "gronwall_bound");
        parts.push((a && b, format!("gamma {}: {ta}, {tb}", r.params.gamma)));
    }
    let sc = ScenarioSpec::new(ScenarioId::RotationObjectivity).build()?;
    let (traj, mut ledger) = run(&sc)?;
    let p = with_discrete_korn(&sc.mesh, &sc.params)?;
    let dict = TestDictionary::new(&sc.mesh, &p)?;
    let rep = certify_steps(&sc.mesh, &traj, &mut ledger, &dict, &p, 1e-7)?;
    let (m, tm) = check(&rep, "energy_monotone");
    let (e, te) = check(&rep, "energy_inequality");
    let (g, tg) = check(&rep, "gronwall_bound");
    parts.push((m && e && g, format!("unforced: {tm}, {te}, {tg}")));
    Ok(all(&parts))
}

fn criterion_5() -> Outcome {
    let mesh = build_mesh(8, 8, [1.0, 1.0], BoundarySpec::all_dirichlet())?;
    let rep = convexity_suite(&shear_params(1e-2), &mesh, 200, 3)?;
    Ok(all(&[
        check(&rep, "F_midpoint_convexity"),
        check(&rep, "J_midpoint_convexity"),
        check(&rep, "G_nonnegativity"),
        check(&rep, "F_lower_bound"),
        check(&rep, "admissibility_gate"),
    ]))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = shear_params(1e-2);
    let mut pointwise = 0.0f64;
    for _ in 0..10_000 {
        let e = SymTensor3::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let g = Tensor3::new(std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))));
        let (_, w) = sym_skew(g);
        let s = dphi(e, &p);
        pointwise = pointwise.max(jaumann_bracket(e, w)?.ddot(s).abs() / (e.norm() * w.norm() * s.norm()));
    }
    let slip = BoundarySpec {
        left: BoundaryKind::Dirichlet,
        right: BoundaryKind::Slip,
        bottom: BoundaryKind::Slip,
        top: BoundaryKind::Slip,
        rigid_motion_filter: false,
    };
    let mut conv = 0.0f64;
    let mut spin = 0.0f64;
    for bc in [BoundarySpec::all_dirichlet(), slip] {
        let mesh = build_mesh(32, 32, [1.0, 1.0], bc)?;
        for _ in 0..50 {
            let mut v = VectorField { data: (0..2 * mesh.nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            mesh.constrain(&mut v);
            let c = convection_operator(&mesh, &p, &v).bilinear(&v.data, &v.data);
            conv = conv.max(c.abs() / (p.rho * v.max_abs().powi(3) * mesh.lx * mesh.ly));
            let e = TensorField { data: (0..6 * mesh.nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            let s = e.map(|t| dphi(t, &p));
            let r = rotation_operator(&mesh, &v).bilinear(&s.data, &e.data);
            spin = spin.max(r.abs() / (v.max_abs() / mesh.hx * e.max_norm() * s.max_norm()));
        }
    }
    Ok((
        pointwise <= 1e-12 && conv <= 1e-11 && spin <= 1e-11,
        format!("bracket:Dphi {pointwise:.3e} (tol 1e-12); v'C(v)v {conv:.3e} (tol 1e-11); spin form {spin:.3e} (tol 1e-11)"),
    ))
}

fn criterion_7(runs: &[&ShearRun]) -> Outcome {
    let parts: Vec<_> = runs
        .iter()
        .map(|r| {
            let (pass, text) = check(&r.steps_report, "yield_feasibility");
            (pass, format!("gamma {}: {text}", r.params.gamma))
        })
        .collect();
    Ok(all(&parts))
}

fn criterion_8() -> Outcome {
    let spec = ScenarioSpec::new(ScenarioId::KelvinVoigtMms);
    let tau = convergence_study(&spec, &[25.0, 50.0, 100.0], StudyMode::Tau)?;
    let t_orders: Vec<f64> = tau.column("order").ok_or("order column")?.into_iter().skip(1).collect();
    let steady = ScenarioSpec { steady: true, ..spec };
    let space = convergence_study(&steady, &[16.0, 32.0, 64.0], StudyMode::Space)?;
    let s_orders: Vec<f64> = space.column("order").ok_or("order column")?.into_iter().skip(1).collect();
    let pass = t_orders.iter().all(|o| *o >= 0.8) && s_orders.iter().all(|o| *o >= 1.6);
    Ok((pass, format!("temporal orders {t_orders:.3?} (min 0.8) at 64x64; spatial orders {s_orders:.3?} (min 1.6)")))
}

fn criterion_9(r: &ShearRun) -> Outcome {
    let rep = check_envar(&r.mesh, &r.traj, &r.ledger, &r.dict, &r.params, 1e-6, 200, 7, None)?;
    Ok(all(&[check(&rep, "envar_form"), check(&rep, "aux_energy_dominates"), check(&rep, "initial_aux_energy")]))
}

fn criterion_10(coarse: &ShearRun) -> Outcome {
    let fine = shear_run(0.0, 2 * coarse.traj.steps())?;
    let e_ratio = fine.ledger.max_energy() / coarse.ledger.max_energy();
    let d_ratio = fine.ledger.total_dissipation() / coarse.ledger.total_dissipation();
    let pairs = coarse.dict.pairs();
    let inc_c = increment_dual_norms(&coarse.mesh, &coarse.traj, &pairs)?;
    let inc_f = increment_dual_norms(&fine.mesh, &fine.traj, &pairs)?;
    let (iv, ie) = (inc_f.velocity_sum / inc_c.velocity_sum, inc_f.strain_sum / inc_c.strain_sum);
    let sweep = convergence_study(&ScenarioSpec::new(ScenarioId::GammaSweep), &GAMMA_LEVELS, StudyMode::Gamma)?;
    let gamma_spread = spread(&sweep.column("max_energy").ok_or("max_energy column")?);
    let pass = (e_ratio - 1.0).abs() <= 0.1
        && (d_ratio - 1.0).abs() <= 0.1
        && gamma_spread <= 0.1
        && (0.3..=0.7).contains(&iv)
        && (0.3..=0.7).contains(&ie);
    Ok((
        pass,
        format!(
            "N doubling: max energy x{e_ratio:.4}, dissipation x{d_ratio:.4}; gamma spread of max energy {gamma_spread:.3e}; increment sums x{iv:.3} (v), x{ie:.3} (E)"
        ),
    ))
}

fn report(n: usize, title: &str, started: Instant, outcome: Outcome, failed: &mut Vec<usize>) {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    if !pass {
        failed.push(n);
    }
    println!("{} {n:>2} {title}: {detail} [{:.1?}]", if pass { "PASS" } else { "FAIL" }, started.elapsed());
}

fn main() {
    let mut failed = Vec::new();

    let t = Instant::now();
    let prox = prox_oracle_suite(&shear_params(0.0), 1000, 1);
    let prox_elapsed = t.elapsed();
    match &prox {
        Ok(p) => {
            report(1, "prox oracle", Instant::now() - prox_elapsed, criterion_1(p), &mut failed);
            report(2, "Fenchel identities", Instant::now(), criterion_2(p), &mut failed);
        }
        Err(e) => {
            report(1, "prox oracle", t, Err(e.to_string().into()), &mut failed);
            report(2, "Fenchel identities", t, Err(e.to_string().into()), &mut failed);
        }
    }

    let t = Instant::now();
    let runs: Result<Vec<ShearRun>, _> = [0.0, 1e-2].iter().map(|&g| shear_run(g, 50)).collect();
    match &runs {
        Ok(runs) => {
            let refs: Vec<&ShearRun> = runs.iter().collect();
            report(3, "per-step variational inequality", t, criterion_3(&refs), &mut failed);
            report(4, "discrete energy-dissipation inequality", Instant::now(), criterion_4(&refs), &mut failed);
            report(5, "convexity probes", Instant::now(), criterion_5(), &mut failed);
            report(6, "energy neutrality of rotation terms", Instant::now(), criterion_6(), &mut failed);
            report(7, "yield feasibility", Instant::now(), criterion_7(&refs), &mut failed);
            report(8, "manufactured-solution consistency", Instant::now(), criterion_8(), &mut failed);
            report(9, "energy-variational certificate", Instant::now(), criterion_9(&runs[0]), &mut failed);
            report(10, "uniformity in N and gamma", Instant::now(), criterion_10(&runs[0]), &mut failed);
        }
        Err(e) => {
            for (n, title) in [(3, "per-step variational inequality"), (4, "energy inequality"), (7, "yield feasibility")] {
                report(n, title, t, Err(e.to_string().into()), &mut failed);
            }
            report(5, "convexity probes", Instant::now(), criterion_5(), &mut failed);
            report(6, "energy neutrality of rotation terms", Instant::now(), criterion_6(), &mut failed);
            report(8, "manufactured-solution consistency", Instant::now(), criterion_8(), &mut failed);
            for (n, title) in [(9, "energy-variational certificate"), (10, "uniformity in N and gamma")] {
                report(n, title, t, Err(e.to_string().into()), &mut failed);
            }
        }
    }

    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
