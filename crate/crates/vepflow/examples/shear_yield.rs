//! Runs the shear_yield scenario, prints the energy ledger summary and the
//! yield feasibility margin, and optionally writes the ledger as CSV.
//!
//! cargo run --release --example shear_yield -- [gamma] [ledger.csv]

use std::time::Instant;

use vepflow::potentials::dphi;
use vepflow::stepper::{run, ScenarioId, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut spec = ScenarioSpec::new(ScenarioId::ShearYield);
    spec.params.gamma = args.first().map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let sc = spec.build()?;

    let t0 = Instant::now();
    let (traj, ledger) = run(&sc)?;
    println!("{} steps on {}x{}, gamma = {}, {:.1?}", traj.steps(), spec.nx, spec.ny, spec.params.gamma, t0.elapsed());

    let worst_residual = ledger.rows.iter().skip(1).map(|r| r.ineq_residual).fold(f64::NEG_INFINITY, f64::max);
    let picard: usize = ledger.rows.iter().map(|r| r.picard_iters).sum();
    let admm: usize = ledger.rows.iter().map(|r| r.admm_iters).sum();
    println!("max energy {:.6e}, total dissipation {:.6e}, total P {:.6e}", ledger.max_energy(), ledger.total_dissipation(), ledger.total_p());
    println!("worst per-step energy residual {worst_residual:.3e}");
    println!("Picard sweeps {picard}, ADMM iterations {admm}");

    let sigma = sc.params.sigma_yield;
    let mut worst = 0.0f64;
    for s in traj.states.iter().skip(1) {
        for i in 0..sc.mesh.nodes() {
            worst = worst.max(dphi(s.e.get(i), &sc.params).dev().norm() - sigma);
        }
    }
    println!("max over accepted steps and nodes of |dev Dphi(E)| - sigma_yield: {worst:.3e}");

    if let Some(path) = args.get(1) {
        std::fs::write(path, ledger.to_csv())?;
        println!("ledger written to {path}");
    }
    Ok(())
}
