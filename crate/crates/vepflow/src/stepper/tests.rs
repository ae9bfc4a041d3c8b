use super::*;
use crate::discretization::{build_mesh, BoundarySpec};
use crate::potentials::fenchel_gap;

fn mesh(n: usize) -> Mesh {
    build_mesh(n, n, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap()
}

fn uniform_state(m: &Mesh, e: SymTensor3) -> State {
    State::new(VectorField::zeros(m.nodes()), m.interpolate_tensor(|_, _| e))
}

#[test]
fn zero_is_a_fixed_point() {
    let m = mesh(4);
    for gamma in [0.0, 1e-2] {
        let p = scenarios::shear_params(gamma);
        let st = Stepper::new(&m, &p, 0.1, SolverOptions::default()).unwrap();
        let zero = State::zeros(&m);
        let out = st.step(&zero, &TensorField::zeros(m.nodes()), &Load::zero(m.nodes())).unwrap();
        assert_eq!(out.state, zero);
        assert_eq!(out.xi, TensorField::zeros(m.nodes()));
        assert_eq!(out.cert.picard_iters, 1);
    }
}

/// With v = 0 and spatially constant 𝔼, every node follows the scalar
/// backward-Euler recursion Z ← argmin |Z − G dev 𝔼ⁿ⁻¹|²/(2τG) + P(Z).
#[test]
fn constant_strain_matches_backward_euler_oracle() {
    let m = mesh(4);
    let tau = 0.05;
    let e0 = SymTensor3::new(0.02, -0.01, 0.005, 0.03, 0.0, 0.0);
    for (model, gamma) in [
        (DissipationModel::Zero, 0.0),
        (DissipationModel::Viscous, 0.0),
        (DissipationModel::Yield, 0.0),
        (DissipationModel::Viscous, 1e-2),
        (DissipationModel::Yield, 1e-2),
    ] {
        let p = MaterialParams {
            bulk: 1.5,
            shear: 0.8,
            nu: 2.0,
            sigma_yield: 0.02,
            gamma,
            dissipation: model,
            ..Default::default()
        };
        let st = Stepper::new(&m, &p, tau, SolverOptions::default()).unwrap();
        let mut s = uniform_state(&m, e0);
        let mut xi = TensorField::zeros(m.nodes());
        let mut dev = e0.dev();
        for _ in 0..5 {
            let out = st.step(&s, &xi, &Load::zero(m.nodes())).unwrap_or_else(|e| panic!("{model:?} γ={gamma}: {e}"));
            s = out.state;
            xi = out.xi;
            // Scalar oracle on the radial magnitude of G dev 𝔼.
            let z = dev * p.shear;
            let r = match model {
                DissipationModel::Zero => z.norm(),
                DissipationModel::Viscous => z.norm() / (1.0 + tau * p.shear * p.nu),
                DissipationModel::Yield => (z.norm() / (1.0 + tau * p.shear * p.nu)).min(p.sigma_yield),
            };
            dev = z * (r / z.norm() / p.shear);
            for i in 0..m.nodes() {
                let e = s.e.get(i);
                assert!((e - (e0.sph() + dev)).max_abs() < 1e-9, "{model:?} γ={gamma}: {e:?}");
                assert!(s.v.get(i)[0].abs() < 1e-12 && s.v.get(i)[1].abs() < 1e-12);
            }
        }
    }
}

#[test]
fn yield_steps_stay_feasible_and_multiplier_is_consistent() {
    let spec = ScenarioSpec { nx: 8, ny: 8, steps: 5, horizon: 0.05, ..ScenarioSpec::new(ScenarioId::ShearYield) };
    for gamma in [0.0, 1e-2] {
        let mut spec = spec.clone();
        spec.params.gamma = gamma;
        let sc = spec.build().unwrap();
        let (traj, ledger) = run(&sc).unwrap();
        let p = sc.params;
        for (n, (s, xi)) in traj.states.iter().zip(&traj.xi).enumerate().skip(1) {
            for i in 0..sc.mesh.nodes() {
                let z = dphi(s.e.get(i), &p).dev();
                assert!(z.norm() <= p.sigma_yield + 1e-10, "step {n} node {i}: {}", z.norm());
                let gap = fenchel_gap(z, xi.get(i), &p).unwrap().to_f64();
                assert!((-1e-12..=1e-7).contains(&gap), "gap {gap}");
            }
            let r = ledger.rows[n];
            let scale = 1.0 + ledger.rows[n - 1].energy + r.energy;
            assert!(r.ineq_residual <= 1e-7 * scale, "step {n}: r = {}", r.ineq_residual);
        }
    }
}

#[test]
fn unforced_energy_is_nonincreasing() {
    let spec = ScenarioSpec {
        nx: 8,
        ny: 8,
        steps: 6,
        horizon: 0.06,
        forcing: scenarios::ForcingKind::None,
        ..ScenarioSpec::new(ScenarioId::RotationObjectivity)
    };
    let (_, ledger) = run(&spec.build().unwrap()).unwrap();
    for w in ledger.rows.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-9 * (1.0 + w[0].energy));
    }
    assert!(ledger.rows.last().unwrap().energy < ledger.rows[0].energy);
}

#[test]
fn rest_run_is_identically_zero() {
    let sc = ScenarioSpec::new(ScenarioId::Rest).build().unwrap();
    let (traj, ledger) = run(&sc).unwrap();
    assert_eq!(traj.steps(), sc.steps);
    for s in &traj.states {
        assert_eq!(s.v.max_abs(), 0.0);
        assert_eq!(s.e.max_norm(), 0.0);
    }
    for r in &ledger.rows {
        assert_eq!((r.energy, r.dissipation, r.p_term, r.forcing_power, r.ineq_residual), (0.0, 0.0, 0.0, 0.0, 0.0));
    }
    assert_eq!(ledger.to_csv().lines().count(), sc.steps + 2);
}

#[test]
fn prolongation_is_right_continuous() {
    let m = mesh(2);
    let states: Vec<State> = (0..4).map(|k| uniform_state(&m, SymTensor3::IDENTITY * k as f64)).collect();
    let traj = Trajectory { tau: 0.25, states, xi: vec![], loads: vec![] };
    assert_eq!(traj.index_at(-0.1).unwrap(), 0);
    assert_eq!(traj.index_at(0.0).unwrap(), 0);
    assert_eq!(traj.index_at(1e-9).unwrap(), 1);
    assert_eq!(traj.index_at(0.25).unwrap(), 1);
    assert_eq!(traj.index_at(0.2500001).unwrap(), 2);
    assert_eq!(traj.index_at(0.75).unwrap(), 3);
    assert!(traj.index_at(-0.25).is_err());
    assert!(traj.index_at(0.8).is_err());
}

#[test]
fn checkpoint_round_trip_and_corruption() {
    let m = mesh(3);
    let mut s = State::zeros(&m);
    for (k, x) in s.v.data.iter_mut().enumerate() {
        *x = k as f64 * 0.5 - 1.0;
    }
    for (k, x) in s.e.data.iter_mut().enumerate() {
        *x = (k as f64).sin();
    }
    let xi = s.e.scaled(-2.0);
    let c = Checkpoint { nx: 3, ny: 3, step: 7, tau: 0.125, state: s, xi };
    let bytes = c.to_bytes();
    assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), c);
    assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Corrupt(_))));
    let mut bad = bytes.clone();
    bad[8] = 9;
    let err = Checkpoint::from_bytes(&bad).unwrap_err();
    assert!(err.to_string().contains("version"));
    let mut bad = bytes;
    bad[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Corrupt(_))));
}

#[test]
fn increment_norms_of_constant_trajectory_vanish() {
    let m = mesh(4);
    let s = uniform_state(&m, SymTensor3::IDENTITY);
    let traj = Trajectory { tau: 0.1, states: vec![s.clone(), s.clone(), s], xi: vec![], loads: vec![] };
    let dict = vec![TestPair::from_fields(&m, m.interpolate_vector(|x, y| [x * (1.0 - x) * y * (1.0 - y), 0.0]), m.interpolate_tensor(|x, _| SymTensor3::IDENTITY * x), "a").unwrap()];
    let out = increment_dual_norms(&m, &traj, &dict).unwrap();
    assert_eq!(out.velocity, vec![0.0, 0.0]);
    assert_eq!(out.strain, vec![0.0, 0.0]);
    assert!(increment_dual_norms(&m, &traj, &[]).is_err());
}

/// Two equal increments: ∫(vⁿ − vⁿ⁻¹)·ψ by independent 3×3 Gauss.
#[test]
fn increment_norm_matches_quadrature() {
    let m = mesh(4);
    let v1 = m.interpolate_vector(|x, y| [x * (1.0 - x) * y * (1.0 - y), x * y * (1.0 - x)]);
    let traj = Trajectory {
        tau: 0.1,
        states: vec![
            State::zeros(&m),
            State::new(v1.clone(), TensorField::zeros(m.nodes())),
            State::new(v1.scaled(2.0), TensorField::zeros(m.nodes())),
        ],
        xi: vec![],
        loads: vec![],
    };
    let psi = m.interpolate_vector(|x, y| [(std::f64::consts::PI * x).sin() * y * (1.0 - y), 0.0]);
    let t = TestPair::from_fields(&m, psi.clone(), TensorField::zeros(m.nodes()), "p").unwrap();
    let out = increment_dual_norms(&m, &traj, std::slice::from_ref(&t)).unwrap();
    let mut expected = 0.0;
    for el in 0..m.elements() {
        let nodes = m.element_nodes(el);
        for g in m.quadrature(3) {
            let a = v1.eval(&nodes, &g.basis).v;
            let b = psi.eval(&nodes, &g.basis).v;
            expected += g.weight * (a[0] * b[0] + a[1] * b[1]);
        }
    }
    expected = expected.abs() / (t.norms.psi + t.norms.grad_psi);
    for n in 0..2 {
        assert!((out.velocity[n] - expected).abs() < 1e-14, "{} vs {expected}", out.velocity[n]);
    }
    // The first interval is excluded from the L¹(τ, T) sum.
    assert!((out.velocity_sum - 0.1 * expected).abs() < 1e-15);
}

#[test]
fn ledger_csv_has_spec_columns() {
    let ledger = EnergyLedger {
        tau: 0.1,
        params: MaterialParams::default(),
        rows: vec![LedgerRow {
            step: 0,
            time: 0.0,
            energy: 1.0,
            dissipation: 0.0,
            p_term: 0.0,
            forcing_power: 0.0,
            ineq_residual: 0.0,
            picard_iters: 0,
            admm_iters: 0,
            cert_worst_f: f64::NAN,
            aux_energy: 1.0,
            ledger_energy: 1.0,
            f_l2_sq: 0.0,
            f_l2_time_integral: 0.0,
        }],
    };
    let csv = ledger.to_csv();
    assert_eq!(
        csv.lines().next().unwrap(),
        "step,time,energy,dissipation,P_term,forcing_power,ineq_residual,picard_iters,admm_iters,cert_worst_F"
    );
    assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 10);
}
