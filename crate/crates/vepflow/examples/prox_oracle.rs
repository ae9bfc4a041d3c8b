//! Checks the resolvent and conjugates of the dissipation potential and the
//! stored energy against brute-force radial minimization.
//!
//! cargo run --release --example prox_oracle -- [samples] [seed]

use vepflow::stepper::scenarios::shear_params;
use vepflow::verify::prox_oracle_suite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let samples: usize = args.first().map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let seed: u64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let report = prox_oracle_suite(&shear_params(0.0), samples, seed)?;
    print!("{}", report.summary());
    if !report.passed() {
        std::process::exit(3);
    }
    Ok(())
}
