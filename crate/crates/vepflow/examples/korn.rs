//! Discrete Korn constant: the Dirichlet lower bound, behavior under mesh
//! refinement and homogeneity in the shear viscosity.
//!
//! cargo run --release --example korn

use std::time::Instant;

use vepflow::discretization::{build_mesh, korn_constant, korn_eigenvalue, BoundaryKind, BoundarySpec, KORN_SAFETY};
use vepflow::potentials::MaterialParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = MaterialParams { mu1: 0.5, mu2: 0.5, ..Default::default() };
    let mixed = BoundarySpec {
        left: BoundaryKind::Dirichlet,
        right: BoundaryKind::Slip,
        bottom: BoundaryKind::Dirichlet,
        top: BoundaryKind::Slip,
        rigid_motion_filter: false,
    };
    for (name, bc) in [("dirichlet", BoundarySpec::all_dirichlet()), ("mixed", mixed)] {
        println!("{name}: nx, eigenvalue, korn constant, time");
        for n in [8, 16, 32, 64] {
            let mesh = build_mesh(n, n, [1.0, 1.0], bc)?;
            let t0 = Instant::now();
            let mu = korn_constant(&mesh, &p)?;
            println!("  {n:>3}  {:.10}  {mu:.10}  {:.1?}", mu / KORN_SAFETY, t0.elapsed());
        }
    }
    let mesh = build_mesh(16, 16, [1.0, 1.0], BoundarySpec::all_dirichlet())?;
    let base = korn_eigenvalue(&mesh, &p)?;
    let doubled = korn_eigenvalue(&mesh, &MaterialParams { mu1: 2.0 * p.mu1, mu2: 2.0 * p.mu2, ..p })?;
    println!("mu1 = {}: eigenvalue {base:.10}, lower bound mu1 holds: {}", p.mu1, base >= p.mu1);
    println!("doubling both viscosities scales the eigenvalue by {:.10}", doubled / base);
    Ok(())
}
