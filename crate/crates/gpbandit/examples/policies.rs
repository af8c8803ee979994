//! Arm selection on a fixed posterior: Thompson sampling's randomized
//! choices next to the deterministic UCB pick, and the discrete confidence
//! width that drives UCB.

use gpbandit::domain::Domain;
use gpbandit::gp::Posterior;
use gpbandit::kernel::Kernel;
use gpbandit::policy::{beta_discrete, select_ts, select_ucb};
use gpbandit::rng::stream_rng;
use std::sync::Arc;

fn main() -> gpbandit::Result<()> {
    let domain = Arc::new(Domain::grid(1, 1.0, 5)?);
    let kernel = Arc::new(Kernel::se(0.5)?);
    let post = Posterior::prior(domain.clone(), kernel, 0.2)?
        .update(1, 0.8)?
        .update(3, 0.6)?;

    println!("posterior state:");
    for i in 0..domain.len() {
        println!(
            "  arm {i} (x = {:.2}): mean {:>7.4}, std {:.4}",
            domain.point(i)[0],
            post.mean()[i],
            post.std(i)
        );
    }

    // Thompson sampling explores in proportion to the posterior argmax law.
    let mut rng = stream_rng(99, 0);
    let n_draws = 10_000;
    let mut counts = vec![0u32; domain.len()];
    for _ in 0..n_draws {
        counts[select_ts(&post, &mut rng)?] += 1;
    }
    println!("\nthompson sampling over {n_draws} draws:");
    for (i, c) in counts.iter().enumerate() {
        println!("  arm {i}: {:>6.3}", *c as f64 / n_draws as f64);
    }

    // UCB with the discrete-domain width schedule.
    println!("\nucb picks by round (delta = 0.1):");
    for t in [1u64, 10, 100] {
        let beta = beta_discrete(domain.len(), t, 0.1)?;
        let arm = select_ucb(&post, beta)?;
        println!("  t = {t:>3}: beta = {beta:>7.4}, arm {arm}");
    }
    Ok(())
}
