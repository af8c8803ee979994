//! Condition a GP on a handful of noisy observations and inspect the
//! posterior surface, then confirm that one-at-a-time updates land on the
//! same posterior as batch conditioning.

use gpbandit::domain::Domain;
use gpbandit::gp::{Dataset, Posterior};
use gpbandit::kernel::Kernel;
use std::sync::Arc;

fn main() -> gpbandit::Result<()> {
    let domain = Arc::new(Domain::grid(1, 1.0, 11)?);
    let kernel = Arc::new(Kernel::se(0.25)?);
    let noise_var = 0.05;

    // Three observations of a bump near x = 0.4.
    let data = Dataset::new(vec![2, 4, 8], vec![0.3, 0.9, -0.4]);
    let post = Posterior::posterior(domain.clone(), kernel.clone(), noise_var, &data)?;

    println!("posterior after {} observations (se kernel, ell = 0.25):", data.len());
    println!("{:>6} {:>9} {:>8}", "x", "mean", "std");
    for i in 0..domain.len() {
        println!(
            "{:>6.2} {:>9.4} {:>8.4}",
            domain.point(i)[0],
            post.mean()[i],
            post.std(i)
        );
    }

    // The same dataset applied one observation at a time.
    let mut seq = Posterior::prior(domain.clone(), kernel, noise_var)?;
    for (&i, &y) in data.indices.iter().zip(&data.values) {
        seq = seq.update(i, y)?;
    }
    let max_err = (0..domain.len())
        .map(|i| (seq.mean()[i] - post.mean()[i]).abs())
        .fold(0.0_f64, f64::max);
    println!("\nsequential vs batch posterior: max mean difference {max_err:.2e}");
    Ok(())
}
