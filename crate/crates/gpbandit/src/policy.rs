//! Arm-selection rules: Thompson sampling (argmax of one joint posterior
//! draw) and UCB (argmax of mean plus scaled standard deviation), together
//! with the discrete-domain confidence width schedule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::Posterior;

/// Which selection rule an experiment runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PolicyKind {
    ThompsonSampling,
    /// UCB with beta_t = 2 log(|X| t (t+1) / delta).
    Ucb { delta: f64 },
}

/// Index of the largest value, ties broken toward the lowest index. NaN
/// entries never win.
pub fn argmax_lowest<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    best_i
}

/// Thompson sampling: draw one path from the posterior and take its argmax.
pub fn select_ts<R: Rng + ?Sized>(posterior: &Posterior, rng: &mut R) -> Result<usize> {
    let path = posterior.sample_path(rng)?;
    Ok(argmax_lowest(path.iter().copied()))
}

/// UCB: maximize mean + sqrt(beta) * std over the domain.
pub fn select_ucb(posterior: &Posterior, beta: f64) -> Result<usize> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParam(format!(
            "ucb width beta must be finite and nonnegative (got {beta})"
        )));
    }
    let n = posterior.domain().len();
    Ok(argmax_lowest(
        (0..n).map(|i| posterior.mean()[i] + beta.sqrt() * posterior.std(i)),
    ))
}

/// Confidence width for a finite domain after a union bound over points and
/// rounds: beta_t = 2 log(n t (t+1) / delta).
pub fn beta_discrete(n_points: usize, t: u64, delta: f64) -> Result<f64> {
    if n_points == 0 {
        return Err(Error::InvalidParam("domain must be nonempty".into()));
    }
    if t == 0 {
        return Err(Error::InvalidParam("round index t starts at 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParam(format!(
            "confidence level delta must lie in (0, 1) (got {delta})"
        )));
    }
    let t = t as f64;
    Ok(2.0 * (n_points as f64 * t * (t + 1.0) / delta).ln())
}
