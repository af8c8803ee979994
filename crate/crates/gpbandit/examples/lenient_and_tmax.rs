//! Lenient regret in practice: count the rounds whose instantaneous regret
//! exceeds a tolerance, watch the count saturate as the horizon doubles,
//! and compare against the saturation-time fixed point and the lenient
//! regret bound built from an information-gain curve.

use gpbandit::bounds::{
    lenient_count_beta, lenient_regret_beta, lenient_regret_bound, tmax_fixed_point,
};
use gpbandit::domain::Domain;
use gpbandit::info_gain::mig_greedy;
use gpbandit::kernel::Kernel;
use gpbandit::policy::PolicyKind;
use gpbandit::regret::{run_replications, EpisodeConfig};
use std::sync::Arc;

fn main() -> gpbandit::Result<()> {
    let domain = Arc::new(Domain::grid(1, 1.0, 50)?);
    let kernel = Arc::new(Kernel::se(0.2)?);
    let noise_var = 0.01;
    let delta = 0.5;
    let n_reps = 60;

    println!("lenient statistics at tolerance delta = {delta} (50-point se grid):");
    println!("{:>6} {:>10} {:>12} {:>12}", "T", "mean R_T", "mean LR_T", "mean count");
    for horizon in [64u64, 128, 256] {
        let cfg = EpisodeConfig {
            domain: domain.clone(),
            kernel: kernel.clone(),
            noise_var,
            horizon,
            policy: PolicyKind::ThompsonSampling,
            delta: Some(delta),
        };
        let s = run_replications(&cfg, n_reps, 271)?;
        println!(
            "{horizon:>6} {:>10.3} {:>12.3} {:>12.3}",
            s.mean_rt, s.mean_lenient_regret, s.mean_lenient_count
        );
    }

    // The theory side: a greedy gain curve feeds the fixed point that
    // bounds the expected count, and the lenient regret bound on top.
    let horizon = 256u64;
    let curve = mig_greedy(&kernel, noise_var, &domain, horizon as usize)?;
    let beta_count = lenient_count_beta(horizon, domain.len())?;
    let tm = tmax_fixed_point(&curve, beta_count, delta, horizon, noise_var, None)?;
    println!("\nfixed point at T = {horizon}: t_max = {:.1}", tm.value);
    println!("  capped: {}, beyond the curve: {}", tm.capped, tm.extrapolated);

    let beta_lr = lenient_regret_beta(horizon, domain.len())?;
    let bound = lenient_regret_bound(&curve, beta_lr, tm.value, noise_var)?;
    println!("  lenient regret bound from t_max: {bound:.1}");
    println!("(the bound is loose by design; the interest is the saturation shape)");
    Ok(())
}
