//! Randomized invariants across modules.

use proptest::prelude::*;
use vepflow::cli::Config;
use vepflow::discretization::{build_mesh, BoundarySpec, TensorField, VectorField};
use vepflow::functionals::{dissipation_rate, energy, f_step, Load, State, TestPair};
use vepflow::potentials::{dphi, phi, phi_conj, resolvent_p, DissipationModel, MaterialParams};
use vepflow::stepper::{Checkpoint, ScenarioId};
use vepflow::tensors::{jaumann_bracket, sym_skew, SymTensor3, Tensor3};

fn sym() -> impl Strategy<Value = SymTensor3> {
    prop::array::uniform6(-5.0f64..5.0).prop_map(SymTensor3::from_array)
}

fn general() -> impl Strategy<Value = Tensor3> {
    prop::array::uniform3(prop::array::uniform3(-5.0f64..5.0)).prop_map(Tensor3::new)
}

fn material() -> impl Strategy<Value = MaterialParams> {
    (0.1f64..10.0, 0.1f64..10.0, 0.1f64..5.0, 0.01f64..2.0, 0.0f64..0.1).prop_map(|(k, g, nu, sigma, gamma)| MaterialParams {
        bulk: k,
        shear: g,
        nu,
        sigma_yield: sigma,
        gamma,
        dissipation: DissipationModel::Yield,
        ..Default::default()
    })
}

fn field(n: usize, len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spin_transports_stored_energy_neutrally(e in sym(), g in general(), p in material()) {
        let (_, w) = sym_skew(g);
        let s = dphi(e, &p);
        let r = jaumann_bracket(e, w).unwrap().ddot(s);
        prop_assert!(r.abs() <= 1e-12 * (1.0 + e.norm() * w.norm() * s.norm()));
    }

    #[test]
    fn stored_energy_satisfies_fenchel_equality(e in sym(), p in material()) {
        let s = dphi(e, &p);
        let gap = phi(e, &p) + phi_conj(s, &p) - e.ddot(s);
        prop_assert!(gap.abs() <= 1e-12 * (1.0 + e.ddot(s).abs()));
    }

    #[test]
    fn resolvent_lands_in_the_yield_ball(x in sym(), lambda in 0.01f64..10.0, p in material()) {
        let a = resolvent_p(x.dev(), lambda, &p).unwrap();
        prop_assert!(a.norm() <= p.sigma_yield * (1.0 + 1e-12));
    }

    #[test]
    fn energy_and_dissipation_are_quadratic(v in field(2, 25), e in field(6, 25), lambda in -3.0f64..3.0, p in material()) {
        let mesh = build_mesh(4, 4, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap();
        let mut vf = VectorField { data: v };
        mesh.constrain(&mut vf);
        let s = State::new(vf, TensorField { data: e });
        let ls = s.combine(lambda, &s, 0.0);
        let (e1, e2) = (energy(&mesh, &p, &s), energy(&mesh, &p, &ls));
        let (d1, d2) = (dissipation_rate(&mesh, &p, &s), dissipation_rate(&mesh, &p, &ls));
        prop_assert!((e2 - lambda * lambda * e1).abs() <= 1e-12 * (1.0 + e2.abs()));
        prop_assert!((d2 - lambda * lambda * d1).abs() <= 1e-12 * (1.0 + d2.abs()));
        prop_assert!(e1 >= 0.0 && d1 >= 0.0);
    }

    #[test]
    fn zero_test_pair_gives_the_energy_residual(v in field(2, 25), e in field(6, 25), tau in 0.001f64..0.5) {
        let mesh = build_mesh(4, 4, [1.0, 1.0], BoundarySpec::all_dirichlet()).unwrap();
        let p = MaterialParams { dissipation: DissipationModel::Viscous, gamma: 0.01, ..Default::default() };
        let mut vf = VectorField { data: v };
        mesh.constrain(&mut vf);
        let s = State::new(vf, TensorField { data: e });
        let prev = s.combine(0.5, &s, 0.0);
        let f = f_step(&mesh, &p, &s, &prev, &TestPair::zero(&mesh), tau, &Load::zero(mesh.nodes())).unwrap();
        let p_state = vepflow::functionals::p_term(&mesh, &p, &s.e).to_f64();
        let expected = energy(&mesh, &p, &s) - energy(&mesh, &p, &prev) + tau * (dissipation_rate(&mesh, &p, &s) + p_state);
        let total = f.total().to_f64();
        prop_assert!((total - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "{} vs {}", total, expected);
    }

    #[test]
    fn checkpoints_round_trip(nx in 1usize..5, ny in 1usize..5, step in 0usize..1000, tau in 1e-4f64..1.0, seed in any::<u64>()) {
        let nodes = (nx + 1) * (ny + 1);
        let val = |k: usize| ((seed.wrapping_mul(6364136223846793005).wrapping_add(k as u64) >> 11) as f64) * 1e-12 - 1.0;
        let c = Checkpoint {
            nx,
            ny,
            step,
            tau,
            state: State::new(
                VectorField { data: (0..2 * nodes).map(val).collect() },
                TensorField { data: (0..6 * nodes).map(|k| val(k + 7)).collect() },
            ),
            xi: TensorField { data: (0..6 * nodes).map(|k| val(k + 13)).collect() },
        };
        let bytes = c.to_bytes();
        prop_assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), c);
        for cut in [0, 8, bytes.len() / 2, bytes.len() - 1] {
            prop_assert!(Checkpoint::from_bytes(&bytes[..cut]).is_err());
        }
    }

    #[test]
    fn resolved_configs_round_trip(
        id in prop::sample::select(ScenarioId::ALL.to_vec()),
        nx in 2usize..40,
        steps in 1usize..200,
        gamma in 0.0f64..0.5,
        sigma in 0.01f64..2.0,
        seed in any::<u64>(),
    ) {
        let text = format!("scenario = {}\nnx = {nx}\nN = {steps}\ngamma = {gamma}\nsigma_yield = {sigma}\nseed = {seed}\n", id.name());
        let c = Config::parse(&text).unwrap();
        prop_assert_eq!(c.spec.nx, nx);
        prop_assert_eq!(c.spec.params.gamma, gamma);
        let again = Config::parse(&c.resolved()).unwrap();
        prop_assert_eq!(again.resolved(), c.resolved());
        prop_assert_eq!(again.spec, c.spec);
    }
}
