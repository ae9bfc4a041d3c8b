//! Uniformity of the discrete bounds in N and γ: energy and dissipation
//! under step doubling, the γ sweep, and the τ-weighted increment norms.
//!
//! cargo run --release --example gamma_sweep

use vepflow::stepper::scenarios::GAMMA_LEVELS;
use vepflow::stepper::{increment_dual_norms, run, ScenarioId, ScenarioSpec};
use vepflow::verify::{convergence_study, with_discrete_korn, StudyMode, TestDictionary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::new(ScenarioId::GammaSweep);
    let table = convergence_study(&spec, &GAMMA_LEVELS, StudyMode::Gamma)?;
    println!("gamma sweep on {}x{}, N = {}", spec.nx, spec.ny, spec.steps);
    print!("{}", table.to_csv());
    let e = table.column("max_energy").expect("column present");
    let spread = (e.iter().cloned().fold(f64::MIN, f64::max) - e.iter().cloned().fold(f64::MAX, f64::min)) / e[0];
    println!("relative spread of max energy over γ: {spread:.3e}\n");

    let base = ScenarioSpec::new(ScenarioId::ShearYield);
    let mut rows = Vec::new();
    for steps in [base.steps, 2 * base.steps] {
        let sc = ScenarioSpec { steps, ..base.clone() }.build()?;
        let (traj, ledger) = run(&sc)?;
        let p = with_discrete_korn(&sc.mesh, &sc.params)?;
        let dict = TestDictionary::new(&sc.mesh, &p)?.pairs();
        let inc = increment_dual_norms(&sc.mesh, &traj, &dict)?;
        rows.push((steps, ledger.max_energy(), ledger.total_dissipation(), inc.velocity_sum, inc.strain_sum));
    }
    println!("N,max_energy,total_dissipation,increment_v,increment_E");
    for r in &rows {
        println!("{},{:.6e},{:.6e},{:.6e},{:.6e}", r.0, r.1, r.2, r.3, r.4);
    }
    let (a, b) = (rows[0], rows[1]);
    println!(
        "ratios under N doubling: energy {:.4}, dissipation {:.4}, increment_v {:.4}, increment_E {:.4}",
        b.1 / a.1,
        b.2 / a.2,
        b.3 / a.3,
        b.4 / a.4
    );
    Ok(())
}
