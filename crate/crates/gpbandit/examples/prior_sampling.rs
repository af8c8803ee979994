//! Draw sample paths from a GP prior and check the empirical covariance of
//! the draws against the kernel they came from.

use gpbandit::domain::Domain;
use gpbandit::gp::sample_prior_f;
use gpbandit::kernel::{Kernel, MaternNu};
use gpbandit::rng::stream_rng;

fn main() -> gpbandit::Result<()> {
    let domain = Domain::grid(1, 1.0, 5)?;
    let kernel = Kernel::matern(0.4, MaternNu::FiveHalves)?;
    let mut rng = stream_rng(2024, 0);

    println!("three sample paths from a matern 5/2 prior (ell = 0.4):");
    for _ in 0..3 {
        let f = sample_prior_f(&domain, &kernel, &mut rng)?;
        let cells: Vec<String> = f.iter().map(|v| format!("{v:>7.3}")).collect();
        println!("  [{}]", cells.join(" "));
    }

    // Empirical covariance between the endpoints over many draws.
    let n_draws = 20_000;
    let (mut s0, mut s4, mut s04, mut s00, mut s44) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_draws {
        let f = sample_prior_f(&domain, &kernel, &mut rng)?;
        s0 += f[0];
        s4 += f[4];
        s04 += f[0] * f[4];
        s00 += f[0] * f[0];
        s44 += f[4] * f[4];
    }
    let n = n_draws as f64;
    let cov = s04 / n - (s0 / n) * (s4 / n);
    let var0 = s00 / n - (s0 / n) * (s0 / n);
    let var4 = s44 / n - (s4 / n) * (s4 / n);
    let k = kernel.eval(domain.point(0), domain.point(4))?;
    println!("\nendpoint statistics over {n_draws} draws:");
    println!("  empirical cov(f(0), f(1)) = {cov:.4}   kernel value = {k:.4}");
    println!("  empirical var(f(0)) = {var0:.4}, var(f(1)) = {var4:.4}   (prior: 1.0)");
    Ok(())
}
