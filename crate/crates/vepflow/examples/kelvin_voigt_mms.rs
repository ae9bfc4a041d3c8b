//! Manufactured-solution convergence study for the Kelvin–Voigt limit
//! (P = 0, γ > 0): temporal order at fixed mesh, spatial order on the
//! steady variant.
//!
//! cargo run --release --example kelvin_voigt_mms -- [tau|space|both]

use std::time::Instant;

use vepflow::stepper::{ScenarioId, ScenarioSpec};
use vepflow::verify::{convergence_study, StudyMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let which = std::env::args().nth(1).unwrap_or_else(|| "both".into());
    let spec = ScenarioSpec::new(ScenarioId::KelvinVoigtMms);
    if which == "tau" || which == "both" {
        let t0 = Instant::now();
        let table = convergence_study(&spec, &[25.0, 50.0, 100.0], StudyMode::Tau)?;
        println!("temporal study on {}x{} ({:.1?})", spec.nx, spec.ny, t0.elapsed());
        print!("{}", table.to_csv());
    }
    if which == "space" || which == "both" {
        let steady = ScenarioSpec { steady: true, ..spec };
        let t0 = Instant::now();
        let table = convergence_study(&steady, &[16.0, 32.0, 64.0], StudyMode::Space)?;
        println!("spatial study, steady solution, N = {} ({:.1?})", steady.steps, t0.elapsed());
        print!("{}", table.to_csv());
    }
    Ok(())
}
