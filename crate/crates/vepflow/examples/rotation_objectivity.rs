//! Energy neutrality of the rotational terms: the Jaumann bracket against
//! Dφ, the skew convection form, the assembled spin form, and the decay of
//! energy in the unforced rotating scenario.
//!
//! cargo run --release --example rotation_objectivity -- [seed]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vepflow::discretization::{convection_operator, rotation_operator, TensorField, VectorField};
use vepflow::potentials::dphi;
use vepflow::stepper::{run, ScenarioId, ScenarioSpec};
use vepflow::tensors::{jaumann_bracket, sym_skew, SymTensor3, Tensor3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ScenarioSpec::new(ScenarioId::RotationObjectivity);
    let sc = spec.build()?;
    let p = sc.params;

    let mut pointwise = 0.0f64;
    for _ in 0..1000 {
        let e = SymTensor3::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let g = Tensor3::new(std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))));
        let (_, w) = sym_skew(g);
        let s = dphi(e, &p);
        let r = jaumann_bracket(e, w)?.ddot(s).abs() / (e.norm() * w.norm() * s.norm());
        pointwise = pointwise.max(r);
    }
    println!("max |(EW - WE):Dphi(E)| / (|E||W||Dphi(E)|) over 1000 tensors: {pointwise:.3e}");

    let mesh = &sc.mesh;
    let mut conv = 0.0f64;
    let mut spin = 0.0f64;
    for _ in 0..50 {
        let mut v = VectorField { data: (0..2 * mesh.nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        mesh.constrain(&mut v);
        let vn = v.max_abs();
        let c = convection_operator(mesh, &p, &v).bilinear(&v.data, &v.data);
        conv = conv.max(c.abs() / (p.rho * vn.powi(3)));

        let e = TensorField { data: (0..6 * mesh.nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let s = e.map(|t| dphi(t, &p));
        let r = rotation_operator(mesh, &v).bilinear(&s.data, &e.data);
        spin = spin.max(r.abs() / (vn * e.max_norm() * s.max_norm()));
    }
    println!("max |v'C(v)v| / (rho |v|^3) over 50 admissible fields: {conv:.3e}");
    println!("max |Dphi(E)'R(v)E| scaled over 50 field pairs: {spin:.3e}");

    let (_, ledger) = run(&sc)?;
    let rise = ledger.rows.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max);
    let first = ledger.rows.first().map(|r| r.energy).unwrap_or(0.0);
    let last = ledger.rows.last().map(|r| r.energy).unwrap_or(0.0);
    println!("unforced run: energy {first:.6e} -> {last:.6e}, largest step increase {rise:.3e}");
    Ok(())
}
