//! Evaluators for the regret guarantees: confidence-width schedules, the
//! second-moment cumulative regret bound, the saturation-time fixed point
//! behind lenient regret, the gap schedule of the improved-rate construction,
//! and a Monte Carlo audit of the one-sided confidence residual.
//!
//! All bound evaluators are plug-in arithmetic on top of information-gain
//! curves; they deliberately share no code with the simulators they certify.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::{sample_prior_f, Posterior};
use crate::info_gain::{c1, gamma_tilde_extended, MigCurve};
use crate::kernel::Kernel;
use crate::rng::{purpose_stream, stream_rng};

const PURPOSE_RESIDUAL: u8 = 6;

/// Saturation times are capped at this multiple of the horizon.
const TMAX_CAP_FACTOR: f64 = 10.0;

const SQRT_2PI: f64 = 2.5066282746310002;

/// Width schedule of the second-moment regret bound at the final round:
/// max(1, 2 log(24 n T^2 / sqrt(2 pi))).
pub fn second_moment_beta(horizon: u64, n_points: usize) -> Result<f64> {
    check_horizon_points(horizon, n_points)?;
    let t = horizon as f64;
    Ok((2.0 * (24.0 * n_points as f64 * t * t / SQRT_2PI).ln()).max(1.0))
}

/// Width schedule of the lenient-count analysis at the final round:
/// 2 log(2 n T^3 (T+1)).
pub fn lenient_count_beta(horizon: u64, n_points: usize) -> Result<f64> {
    check_horizon_points(horizon, n_points)?;
    let t = horizon as f64;
    Ok(2.0 * (2.0 * n_points as f64 * t * t * t * (t + 1.0)).ln())
}

/// Width schedule of the lenient-regret bound at the final round:
/// max(1, 2 log(4 n T / sqrt(2 pi))).
pub fn lenient_regret_beta(horizon: u64, n_points: usize) -> Result<f64> {
    check_horizon_points(horizon, n_points)?;
    let t = horizon as f64;
    Ok((2.0 * (4.0 * n_points as f64 * t / SQRT_2PI).ln()).max(1.0))
}

/// Width used by the confidence-residual audit at scale u:
/// max(1, 2 log(n u / sqrt(2 pi))).
pub fn residual_beta(n_points: usize, u: f64) -> Result<f64> {
    if n_points == 0 {
        return Err(Error::InvalidParam("domain must be nonempty".into()));
    }
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::InvalidParam(format!("scale u must be positive (got {u})")));
    }
    Ok((2.0 * (n_points as f64 * u / SQRT_2PI).ln()).max(1.0))
}

/// Second-moment cumulative regret bound for Thompson sampling on a finite
/// domain: E[R_T^2] <= 12 C1 T (beta_T + 1) gamma_T + sqrt(beta_T).
pub fn second_moment_bound(
    horizon: u64,
    n_points: usize,
    gamma_t: f64,
    noise_var: f64,
) -> Result<f64> {
    if !(gamma_t >= 0.0) || !gamma_t.is_finite() {
        return Err(Error::InvalidParam(format!(
            "gamma_T must be finite and nonnegative (got {gamma_t})"
        )));
    }
    let beta = second_moment_beta(horizon, n_points)?;
    let c = c1(noise_var)?;
    Ok(12.0 * c * horizon as f64 * (beta + 1.0) * gamma_t + beta.sqrt())
}

/// Result of solving the saturation-time fixed point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TmaxResult {
    pub value: f64,
    /// The right side stayed above t all the way to ten horizons, so the
    /// value is the cap rather than a crossing.
    pub capped: bool,
    /// The returned time lies beyond the gain curve, so the curve's final
    /// slope was extrapolated.
    pub extrapolated: bool,
}

/// Solve t = (32 C1 beta / delta^2) gamma_tilde(t) + 1/T (+ extra) for the
/// saturation time. The right side is concave in t and positive at zero, so
/// the largest solution is the unique downcrossing, found here by bisection
/// to absolute residual 1e-6. If no crossing occurs below ten horizons the
/// cap is returned with `capped` set.
pub fn tmax_fixed_point(
    curve: &MigCurve,
    beta: f64,
    delta: f64,
    horizon: u64,
    noise_var: f64,
    extra: Option<f64>,
) -> Result<TmaxResult> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParam(format!("beta must be positive (got {beta})")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParam(format!(
            "gap delta must be positive (got {delta})"
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidParam("horizon must be >= 1".into()));
    }
    let extra = extra.unwrap_or(0.0);
    if !(extra >= 0.0) || !extra.is_finite() {
        return Err(Error::InvalidParam(format!(
            "extra term must be finite and nonnegative (got {extra})"
        )));
    }
    let coef = 32.0 * c1(noise_var)? * beta / (delta * delta);
    let base = 1.0 / horizon as f64 + extra;
    let g = |t: f64| -> Result<f64> {
        let (gam, _) = gamma_tilde_extended(curve, t)?;
        Ok(coef * gam + base - t)
    };

    let cap = TMAX_CAP_FACTOR * horizon as f64;
    if g(cap)? >= 0.0 {
        return Ok(TmaxResult {
            value: cap,
            capped: true,
            extrapolated: cap > curve.horizon() as f64,
        });
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
    }
    let value = 0.5 * (lo + hi);
    Ok(TmaxResult {
        value,
        capped: false,
        extrapolated: value > curve.horizon() as f64,
    })
}

/// Additional fixed-point mass from discretizing a continuous domain:
/// 8 pi^2 (sqrt(beta) + 1)^2 / delta^2.
pub fn continuous_extra_term(beta: f64, delta: f64) -> Result<f64> {
    if !(beta > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParam(
            "continuous extra term needs positive beta and delta".into(),
        ));
    }
    let s = beta.sqrt() + 1.0;
    Ok(8.0 * std::f64::consts::PI.powi(2) * s * s / (delta * delta))
}

/// Lenient regret bound once the saturation time is known:
/// 4 sqrt(C1 beta T_max gamma_tilde(T_max)) + 1.
pub fn lenient_regret_bound(
    curve: &MigCurve,
    beta: f64,
    t_max: f64,
    noise_var: f64,
) -> Result<f64> {
    if !(beta > 0.0) || !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidParam(
            "lenient regret bound needs positive beta and a finite T_max".into(),
        ));
    }
    let (gam, _) = gamma_tilde_extended(curve, t_max)?;
    Ok(4.0 * (c1(noise_var)? * beta * t_max * gam).sqrt() + 1.0)
}

/// The gap schedule of the improved-rate construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaSchedule {
    /// Strictly decreasing gaps, one per refinement stage.
    pub deltas: Vec<f64>,
    /// Number of stages.
    pub i_bar: u32,
    /// Stage ratio q = nu d / (2 (nu + d)).
    pub q: f64,
}

/// Gap sequence delta_i = T^{-(nu/(2(nu+d))) sum_{j<=i} q^{j-1}} for the
/// improved Matern rate, with the stage count chosen so the final stage
/// closes the recursion. Requires smoothness nu > 2.
pub fn delta_schedule(nu: f64, d: u32, horizon: u64) -> Result<DeltaSchedule> {
    if !(nu > 2.0) || !nu.is_finite() {
        return Err(Error::InvalidParam(format!(
            "the improved-rate schedule requires smoothness nu > 2 (got nu = {nu})"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParam("dimension must be >= 1".into()));
    }
    if horizon < 2 {
        return Err(Error::InvalidParam(format!(
            "the gap schedule needs horizon >= 2 (got {horizon})"
        )));
    }
    let df = d as f64;
    let q = nu * df / (2.0 * (nu + df));
    let i_bar = if q >= 1.0 {
        (2.0 * (nu + df) / (nu * nu)).ceil()
    } else {
        let arg = 1.0 - (2.0 * (nu + df) - nu * df) / (nu * nu);
        if !(arg > 0.0) {
            return Err(Error::InvalidParam(format!(
                "stage count is undefined at nu = {nu}, d = {d}"
            )));
        }
        (arg.ln() / q.ln()).ceil()
    };
    let i_bar = (i_bar as u32).max(1);

    let t = horizon as f64;
    let base = nu / (2.0 * (nu + df));
    let mut deltas = Vec::with_capacity(i_bar as usize);
    let mut geo_sum = 0.0;
    let mut q_pow = 1.0;
    for _ in 0..i_bar {
        geo_sum += q_pow;
        q_pow *= q;
        deltas.push(t.powf(-base * geo_sum));
    }
    for w in deltas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidParam(
                "gap schedule failed to decrease strictly".into(),
            ));
        }
    }
    if deltas[0] >= 1.0 || !deltas.last().unwrap().is_finite() || *deltas.last().unwrap() <= 0.0 {
        return Err(Error::InvalidParam("gap schedule left (0, 1)".into()));
    }
    Ok(DeltaSchedule { deltas, i_bar, q })
}

/// Outcome of the confidence-residual audit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub beta: f64,
    pub u: f64,
    pub n_mc: u64,
    pub emp_linear: f64,
    pub se_linear: f64,
    /// 1/u.
    pub bound_linear: f64,
    pub linear_ok: bool,
    pub emp_squared: f64,
    pub se_squared: f64,
    /// 2 sqrt(beta) / u.
    pub bound_squared: f64,
    pub squared_ok: bool,
}

/// Monte Carlo audit of the one-sided residual of the upper confidence
/// surface U = mean + sqrt(beta) std at scale u: the expected excess
/// sup_x (f(x) - U(x))_+ must stay below 1/u and its square below
/// 2 sqrt(beta)/u. Each replication draws a prior function and a small
/// random dataset (zero to three noisy observations), so the audit covers
/// the prior state as well as early posteriors. Flags compare against the
/// bound plus three standard errors.
pub fn residual_check(
    kernel: &Arc<Kernel>,
    domain: &Arc<Domain>,
    noise_var: f64,
    u: f64,
    n_mc: u64,
    master_seed: u64,
) -> Result<ResidualCheck> {
    if n_mc < 2 {
        return Err(Error::InvalidParam("residual audit needs n_mc >= 2".into()));
    }
    let beta = residual_beta(domain.len(), u)?;
    let sqrt_beta = beta.sqrt();
    let noise_sd = noise_var.sqrt();
    let residuals: Vec<f64> = (0..n_mc)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = stream_rng(master_seed, purpose_stream(PURPOSE_RESIDUAL, rep));
            let f = sample_prior_f(domain, kernel, &mut rng)?;
            let mut post = Posterior::prior(domain.clone(), kernel.clone(), noise_var)?;
            let n_obs = rng.random_range(0..=3usize);
            for _ in 0..n_obs {
                let i = rng.random_range(0..domain.len());
                let noise: f64 = rng.sample(StandardNormal);
                post = post.update(i, f[i] + noise_sd * noise)?;
            }
            let mut worst = 0.0_f64;
            for i in 0..domain.len() {
                let excess = f[i] - (post.mean()[i] + sqrt_beta * post.std(i));
                worst = worst.max(excess);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;

    let (emp_linear, se_linear) = mean_se(residuals.iter().copied());
    let (emp_squared, se_squared) = mean_se(residuals.iter().map(|r| r * r));
    let bound_linear = 1.0 / u;
    let bound_squared = 2.0 * sqrt_beta / u;
    Ok(ResidualCheck {
        beta,
        u,
        n_mc,
        emp_linear,
        se_linear,
        bound_linear,
        linear_ok: emp_linear <= bound_linear + 3.0 * se_linear,
        emp_squared,
        se_squared,
        bound_squared,
        squared_ok: emp_squared <= bound_squared + 3.0 * se_squared,
    })
}

fn check_horizon_points(horizon: u64, n_points: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParam("horizon must be >= 1".into()));
    }
    if n_points == 0 {
        return Err(Error::InvalidParam("domain must be nonempty".into()));
    }
    Ok(())
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
