//! Runs the shear_yield scenario and certifies the trajectory against the
//! default test dictionary.
//!
//! cargo run --release --example certify -- [gamma] [nx] [steps]

use std::time::Instant;

use vepflow::stepper::{run, ScenarioId, ScenarioSpec};
use vepflow::verify::{certify_all, with_discrete_korn, TestDictionary, DEFAULT_SAMPLES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gamma: f64 = args.first().map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let mut spec = ScenarioSpec::new(ScenarioId::ShearYield);
    spec.params.gamma = gamma;
    if let Some(n) = args.get(1) {
        spec.nx = n.parse()?;
        spec.ny = spec.nx;
    }
    if let Some(n) = args.get(2) {
        spec.steps = n.parse()?;
    }
    let sc = spec.build()?;

    let t0 = Instant::now();
    let (traj, mut ledger) = run(&sc)?;
    println!("run: {} steps on {}x{} in {:.1?}", traj.steps(), spec.nx, spec.ny, t0.elapsed());

    let t1 = Instant::now();
    let p = with_discrete_korn(&sc.mesh, &sc.params)?;
    let dict = TestDictionary::new(&sc.mesh, &p)?;
    println!("dictionary: {} entries, discrete Korn constant {:.4}", dict.len(), p.korn_mu()?);
    let report = certify_all(&sc.mesh, &traj, &mut ledger, &dict, &p, 1e-7, 1e-6, DEFAULT_SAMPLES, 7)?;
    println!("certify: {:.1?}", t1.elapsed());
    print!("{}", report.summary());
    Ok(())
}
