//! Continuous domains enter the theory through regular grids: resolution
//! rules sized by the posterior-std Lipschitz constants, and the extra
//! fixed-point mass a discretization contributes.

use gpbandit::bounds::{continuous_extra_term, lenient_count_beta};
use gpbandit::domain::{discretization_grid, Domain, GridMode};
use gpbandit::kernel::{matern_sigma_lipschitz, Kernel, MaternNu};

fn main() -> gpbandit::Result<()> {
    println!("posterior-std lipschitz constants:");
    let kernels = [
        ("linear", Kernel::Linear),
        ("se, ell = 0.2", Kernel::se(0.2)?),
        ("matern 5/2, ell = 1", Kernel::matern(1.0, MaternNu::FiveHalves)?),
    ];
    for (label, k) in &kernels {
        println!("  {label:<18}: L_sigma = {:.5}", k.lipschitz_sigma()?);
    }
    println!(
        "  matern at general nu = 2.0: L_sigma = {:.5}",
        matern_sigma_lipschitz(1.0, 2.0)?
    );

    // Grid resolutions for a unit box under both error targets.
    let (d, r, a, b, u) = (2usize, 1.0, 1.0, 1.0, 30.0);
    let tau_lin = discretization_grid(d, r, a, b, u, GridMode::LinearError)?;
    let tau_sq = discretization_grid(d, r, a, b, u, GridMode::SquaredError)?;
    println!("\nresolution for a {d}-d unit box at scale u = {u}:");
    println!("  linear-error rule : tau = {tau_lin} per dimension");
    println!("  squared-error rule: tau = {tau_sq} per dimension");

    let domain = Domain::grid(d, r, tau_lin.min(40) as usize)?;
    println!("  realized lattice  : {} points", domain.len());

    // What the discretization costs inside the saturation fixed point.
    let beta = lenient_count_beta(1024, domain.len())?;
    for delta in [0.5, 0.25] {
        println!(
            "  extra fixed-point mass at delta = {delta}: {:.1}",
            continuous_extra_term(beta, delta)?
        );
    }
    Ok(())
}
