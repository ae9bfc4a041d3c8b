//! Random probes of midpoint convexity, the nonnegative parts of the
//! convexity split and the lower estimate of the incremental functional.
//!
//! cargo run --release --example convexity -- [trials] [nx] [seed]

use vepflow::discretization::{build_mesh, BoundarySpec};
use vepflow::stepper::scenarios::shear_params;
use vepflow::verify::convexity_suite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let trials: usize = args.first().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let n: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let seed: u64 = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let mesh = build_mesh(n, n, [1.0, 1.0], BoundarySpec::all_dirichlet())?;
    let report = convexity_suite(&shear_params(1e-2), &mesh, trials, seed)?;
    print!("{}", report.summary());
    Ok(())
}
