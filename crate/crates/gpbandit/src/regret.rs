//! Episode simulation and the deterministic replication harness.
//!
//! An episode plays one policy against one test function drawn from the
//! prior, recording per-step instantaneous regret, the predictive standard
//! deviation at the chosen arm, and lenient-violation flags. Replications
//! run in parallel over derived streams keyed by (horizon, replication), so
//! summaries are byte-identical at any thread count and independent across
//! horizons.

use std::sync::Arc;

use nalgebra::DVector;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::{sample_prior_f, Posterior};
use crate::info_gain::info_gain_of_indices;
use crate::kernel::Kernel;
use crate::policy::{argmax_lowest, beta_discrete, select_ts, select_ucb, PolicyKind};
use crate::rng::{purpose_stream, stream_rng};

/// Largest horizon and replication count the stream derivation supports.
const MAX_HORIZON: u64 = 1 << 24;
const MAX_REPS: u64 = 1 << 32;

/// Everything needed to play one bandit episode.
#[derive(Clone, Debug)]
pub struct EpisodeConfig {
    pub domain: Arc<Domain>,
    pub kernel: Arc<Kernel>,
    pub noise_var: f64,
    pub horizon: u64,
    pub policy: PolicyKind,
    /// Lenient tolerance: steps with instantaneous regret at or above this
    /// value count as violations. None disables lenient bookkeeping.
    pub delta: Option<f64>,
}

impl EpisodeConfig {
    fn validate(&self) -> Result<()> {
        if !(self.noise_var > 0.0) || !self.noise_var.is_finite() {
            return Err(Error::InvalidParam(format!(
                "noise variance must be positive and finite (got {})",
                self.noise_var
            )));
        }
        if self.horizon == 0 || self.horizon >= MAX_HORIZON {
            return Err(Error::InvalidParam(format!(
                "horizon must lie in [1, {MAX_HORIZON}) (got {})",
                self.horizon
            )));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "lenient tolerance must be positive and finite (got {d})"
                )));
            }
        }
        if let PolicyKind::Ucb { delta } = self.policy {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "ucb confidence delta must lie in (0, 1) (got {delta})"
                )));
            }
        }
        Ok(())
    }
}

/// One step of an episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub arm: usize,
    pub inst_regret: f64,
    /// Predictive standard deviation at the chosen arm before observing.
    pub sigma: f64,
    pub lenient: bool,
}

/// Full per-step record of one episode.
#[derive(Clone, Debug)]
pub struct RegretTrace {
    pub steps: Vec<StepRecord>,
}

impl RegretTrace {
    /// Cumulative regret R_T.
    pub fn cumulative(&self) -> f64 {
        self.steps.iter().map(|s| s.inst_regret).sum()
    }

    /// Regret accumulated only on lenient-violating steps.
    pub fn lenient_regret(&self) -> f64 {
        self.steps
            .iter()
            .filter(|s| s.lenient)
            .map(|s| s.inst_regret)
            .sum()
    }

    /// Number of lenient-violating steps.
    pub fn lenient_count(&self) -> u64 {
        self.steps.iter().filter(|s| s.lenient).count() as u64
    }

    /// Sum of predictive variances at the chosen arms.
    pub fn potential_sum(&self) -> f64 {
        self.steps.iter().map(|s| s.sigma * s.sigma).sum()
    }

    /// Sequence of visited arm indices.
    pub fn visited(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.arm).collect()
    }
}

/// Play one episode of the configured policy against `f_true`, consuming
/// noise and policy randomness from `rng` in step order.
pub fn run_episode(
    cfg: &EpisodeConfig,
    f_true: &DVector<f64>,
    rng: &mut ChaCha12Rng,
) -> Result<RegretTrace> {
    cfg.validate()?;
    if f_true.len() != cfg.domain.len() {
        return Err(Error::DimensionMismatch(format!(
            "test function has {} values but the domain has {} points",
            f_true.len(),
            cfg.domain.len()
        )));
    }
    if f_true.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam("test function has a non-finite value".into()));
    }
    let f_star = f_true[argmax_lowest(f_true.iter().copied())];
    let noise_sd = cfg.noise_var.sqrt();
    let n = cfg.domain.len();

    let mut post = Posterior::prior(cfg.domain.clone(), cfg.kernel.clone(), cfg.noise_var)?;
    let mut steps = Vec::with_capacity(cfg.horizon as usize);
    for t in 1..=cfg.horizon {
        let arm = match cfg.policy {
            PolicyKind::ThompsonSampling => select_ts(&post, rng)?,
            PolicyKind::Ucb { delta } => select_ucb(&post, beta_discrete(n, t, delta)?)?,
        };
        let sigma = post.std(arm);
        let inst_regret = f_star - f_true[arm];
        let lenient = cfg.delta.map_or(false, |d| inst_regret >= d);
        steps.push(StepRecord {
            arm,
            inst_regret,
            sigma,
            lenient,
        });
        let noise: f64 = StandardNormal.sample(rng);
        post = post.update(arm, f_true[arm] + noise_sd * noise)?;
    }
    Ok(RegretTrace { steps })
}

/// Per-replication statistics.
#[derive(Clone, Copy, Debug)]
pub struct RepStats {
    pub rep: u64,
    pub r_t: f64,
    pub r_t2: f64,
    pub lenient_regret: f64,
    pub lenient_count: u64,
    /// Information gain of the visited multiset.
    pub info_gain: f64,
    /// Sum of predictive variances at the visited arms.
    pub potential: f64,
}

/// Aggregates over replications at one horizon.
#[derive(Clone, Debug)]
pub struct ReplicationSummary {
    pub horizon: u64,
    pub n_reps: u64,
    pub mean_rt: f64,
    pub se_rt: f64,
    pub mean_rt2: f64,
    pub se_rt2: f64,
    pub mean_lenient_regret: f64,
    pub se_lenient_regret: f64,
    pub mean_lenient_count: f64,
    pub se_lenient_count: f64,
    pub per_rep: Vec<RepStats>,
}

/// Run replications at the configured horizon; each replication draws its
/// test function from the prior and plays one episode on its own stream.
pub fn run_replications(
    cfg: &EpisodeConfig,
    n_reps: u64,
    master_seed: u64,
) -> Result<ReplicationSummary> {
    Ok(run_impl(cfg, n_reps, master_seed, false)?.0)
}

/// Like `run_replications`, additionally returning every trace in
/// replication order.
pub fn run_replications_with_traces(
    cfg: &EpisodeConfig,
    n_reps: u64,
    master_seed: u64,
) -> Result<(ReplicationSummary, Vec<RegretTrace>)> {
    let (summary, traces) = run_impl(cfg, n_reps, master_seed, true)?;
    Ok((summary, traces.expect("traces were requested")))
}

fn run_impl(
    cfg: &EpisodeConfig,
    n_reps: u64,
    master_seed: u64,
    keep_traces: bool,
) -> Result<(ReplicationSummary, Option<Vec<RegretTrace>>)> {
    cfg.validate()?;
    if n_reps == 0 || n_reps > MAX_REPS {
        return Err(Error::InvalidParam(format!(
            "replication count must lie in [1, {MAX_REPS}] (got {n_reps})"
        )));
    }
    let results: Vec<(RepStats, Option<RegretTrace>)> = (0..n_reps)
        .into_par_iter()
        .map(|rep| -> Result<(RepStats, Option<RegretTrace>)> {
            let mut rng = stream_rng(master_seed, episode_stream(cfg.horizon, rep));
            let f = sample_prior_f(&cfg.domain, &cfg.kernel, &mut rng)?;
            let trace = run_episode(cfg, &f, &mut rng)?;
            let r_t = trace.cumulative();
            let stats = RepStats {
                rep,
                r_t,
                r_t2: r_t * r_t,
                lenient_regret: trace.lenient_regret(),
                lenient_count: trace.lenient_count(),
                info_gain: info_gain_of_indices(
                    &cfg.kernel,
                    cfg.noise_var,
                    &cfg.domain,
                    &trace.visited(),
                )?,
                potential: trace.potential_sum(),
            };
            Ok((stats, keep_traces.then_some(trace)))
        })
        .collect::<Result<_>>()?;

    let per_rep: Vec<RepStats> = results.iter().map(|(s, _)| *s).collect();
    let traces = keep_traces.then(|| results.into_iter().map(|(_, t)| t.unwrap()).collect());

    let (mean_rt, se_rt) = mean_se(per_rep.iter().map(|s| s.r_t));
    let (mean_rt2, se_rt2) = mean_se(per_rep.iter().map(|s| s.r_t2));
    let (mean_lr, se_lr) = mean_se(per_rep.iter().map(|s| s.lenient_regret));
    let (mean_lc, se_lc) = mean_se(per_rep.iter().map(|s| s.lenient_count as f64));
    Ok((
        ReplicationSummary {
            horizon: cfg.horizon,
            n_reps,
            mean_rt,
            se_rt,
            mean_rt2,
            se_rt2,
            mean_lenient_regret: mean_lr,
            se_lenient_regret: se_lr,
            mean_lenient_count: mean_lc,
            se_lenient_count: se_lc,
            per_rep,
        },
        traces,
    ))
}

/// Lenient statistics recomputed from stored traces at a (possibly
/// different) tolerance.
#[derive(Clone, Copy, Debug)]
pub struct LenientStats {
    pub delta: f64,
    pub mean_lenient_regret: f64,
    pub se_lenient_regret: f64,
    pub mean_lenient_count: f64,
    pub se_lenient_count: f64,
}

/// Recompute lenient regret and violation counts from traces at tolerance
/// `delta` (must be positive; a zero tolerance would count every step).
pub fn lenient_stats(traces: &[RegretTrace], delta: f64) -> Result<LenientStats> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParam(format!(
            "lenient tolerance must be positive and finite (got {delta})"
        )));
    }
    if traces.is_empty() {
        return Err(Error::InvalidParam("no traces given".into()));
    }
    let lr: Vec<f64> = traces
        .iter()
        .map(|t| {
            t.steps
                .iter()
                .filter(|s| s.inst_regret >= delta)
                .map(|s| s.inst_regret)
                .sum()
        })
        .collect();
    let lc: Vec<f64> = traces
        .iter()
        .map(|t| t.steps.iter().filter(|s| s.inst_regret >= delta).count() as f64)
        .collect();
    let (mean_lenient_regret, se_lenient_regret) = mean_se(lr.iter().copied());
    let (mean_lenient_count, se_lenient_count) = mean_se(lc.iter().copied());
    Ok(LenientStats {
        delta,
        mean_lenient_regret,
        se_lenient_regret,
        mean_lenient_count,
        se_lenient_count,
    })
}

fn episode_stream(horizon: u64, rep: u64) -> u64 {
    purpose_stream(0, (horizon << 32) | rep)
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = values.collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
