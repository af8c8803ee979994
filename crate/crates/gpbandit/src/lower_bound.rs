//! A planted two-armed instance whose Thompson-sampling regret has a
//! polynomially heavy upper tail.
//!
//! The arms carry a joint Gaussian prior with unit variances and correlation
//! one half. While every pull has gone to arm one, the posterior depends on
//! the history only through the pull count and the running mean, so the
//! probability that the next Thompson draw picks arm one again has a closed
//! form. The simulator exploits this: it advances the cheap scalar recursion
//! while the streak lasts and falls back to the generic posterior machinery
//! the moment arm two is tried. Alongside the simulator live estimators for
//! the individual events behind the heavy tail (a large planted gap with a
//! deceptively strong first arm, benign early noise, and lock-in given both)
//! and a fitter that decides whether tail estimates decay polynomially or
//! exponentially in the horizon.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::Posterior;
use crate::kernel::Kernel;
use crate::policy::select_ts;
use crate::rng::{purpose_stream, stream_rng};

const PURPOSE_LOCKIN: u8 = 1;
const PURPOSE_EVENT_GAP: u8 = 2;
const PURPOSE_EVENT_NOISE: u8 = 3;
const PURPOSE_EVENT_COND: u8 = 4;

/// Attempt budget for the rejection layers of the conditional samplers.
const MAX_REJECTION_ATTEMPTS: u64 = 10_000_000;

/// Standard normal CDF, accurate into both tails.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail 1 - Phi(x), computed directly so that large
/// arguments do not lose precision to cancellation.
pub fn phi_bar(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Posterior mean and covariance of the two arms after t pulls of arm one
/// with running observation mean ybar, at unit prior variances, correlation
/// one half, and unit noise.
pub fn two_arm_posterior(t: u64, ybar: f64) -> (DVector<f64>, DMatrix<f64>) {
    if t == 0 {
        return (
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
        );
    }
    let tf = t as f64;
    let mean =
        DVector::from_column_slice(&[tf * ybar / (tf + 1.0), tf * ybar / (2.0 * (tf + 1.0))]);
    let cov = DMatrix::from_row_slice(
        2,
        2,
        &[
            1.0 / (tf + 1.0),
            1.0 / (2.0 * (tf + 1.0)),
            1.0 / (2.0 * (tf + 1.0)),
            (0.75 * tf + 1.0) / (tf + 1.0),
        ],
    );
    (mean, cov)
}

/// Probability that a Thompson draw from the streak posterior picks arm one
/// again: Phi(t ybar / (2 sqrt(t+1) sqrt(3t/4 + 1))), one half before any
/// data.
pub fn choice_probability(t: u64, ybar: f64) -> f64 {
    if t == 0 {
        return 0.5;
    }
    let tf = t as f64;
    phi(tf * ybar / (2.0 * (tf + 1.0).sqrt() * (0.75 * tf + 1.0).sqrt()))
}

/// What the streak recursion asks its randomness source for. Noise requests
/// carry the pull index so conditional estimators can serve a frozen noise
/// sequence.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Draw {
    /// Observation noise for the pull with this 0-based index.
    Noise(u64),
    /// A fresh uniform in [0, 1) for the choice coupling.
    Uniform,
}

/// Outcome of running the scalar streak recursion.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StreakOutcome {
    /// Completed pulls of arm one.
    pub pulls: u64,
    /// Sum of the arm-one observations.
    pub sum_y: f64,
    /// 1-based step at which arm two was chosen, if the streak broke.
    pub deviated_at: Option<u64>,
}

/// Advance the streak for up to `horizon` steps: each step couples the
/// Thompson choice to a uniform against the closed-form probability, and on
/// arm one consumes the next noise value. This recursion is an exact
/// simulation of Thompson sampling restricted to all-arm-one histories.
pub(crate) fn lockin_streak(
    horizon: u64,
    f1: f64,
    mut draw: impl FnMut(Draw) -> f64,
) -> StreakOutcome {
    let mut pulls = 0u64;
    let mut sum_y = 0.0;
    for step in 1..=horizon {
        let ybar = if pulls == 0 { 0.0 } else { sum_y / pulls as f64 };
        let p = choice_probability(pulls, ybar);
        if draw(Draw::Uniform) < p {
            sum_y += f1 + draw(Draw::Noise(pulls));
            pulls += 1;
        } else {
            return StreakOutcome {
                pulls,
                sum_y,
                deviated_at: Some(step),
            };
        }
    }
    StreakOutcome {
        pulls,
        sum_y,
        deviated_at: None,
    }
}

/// Estimate of the heavy-tail event Pr(R_T >= T/2) at one horizon.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LockinEstimate {
    pub horizon: u64,
    pub n_mc: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub se: f64,
}

/// Monte Carlo estimate of Pr(R_T >= T/2) on the two-armed instance under
/// Thompson sampling with unit noise. Each replication draws the arm pair
/// from the prior, runs the exact scalar recursion while arm one keeps being
/// chosen, and switches to the generic posterior simulator at the first
/// deviation. Replications use derived streams, so the estimate is
/// reproducible at any thread count.
pub fn simulate_lockin(horizon: u64, n_mc: u64, master_seed: u64) -> Result<LockinEstimate> {
    if horizon == 0 {
        return Err(Error::InvalidParam("lock-in horizon must be >= 1".into()));
    }
    if n_mc == 0 {
        return Err(Error::InvalidParam("n_mc must be >= 1".into()));
    }
    let prior = two_arm_prior_posterior()?;
    let successes = (0..n_mc)
        .into_par_iter()
        .map(|rep| -> Result<u64> {
            let mut rng = stream_rng(master_seed, purpose_stream(PURPOSE_LOCKIN, rep));
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let f1 = z1;
            let f2 = 0.5 * z1 + 0.75_f64.sqrt() * z2;

            let streak = lockin_streak(horizon, f1, |d| match d {
                Draw::Noise(_) => rng.sample(StandardNormal),
                Draw::Uniform => rng.random(),
            });

            let mut n1 = streak.pulls;
            let mut n2 = 0u64;
            if let Some(dev_step) = streak.deviated_at {
                // Reconstruct the streak posterior from its sufficient
                // statistic: pull count and mean. Individual values beyond
                // the running mean cannot influence it because the arm-one
                // Gram rows are identical.
                let mut post = prior.clone();
                if streak.pulls > 0 {
                    let ybar = streak.sum_y / streak.pulls as f64;
                    for _ in 0..streak.pulls {
                        post = post.update(0, ybar)?;
                    }
                }
                // The deviation step itself pulls arm two.
                post = post.update(1, f2 + rng.sample::<f64, _>(StandardNormal))?;
                n2 += 1;
                for _ in (dev_step + 1)..=horizon {
                    let arm = select_ts(&post, &mut rng)?;
                    let f = if arm == 0 { f1 } else { f2 };
                    if arm == 0 {
                        n1 += 1;
                    } else {
                        n2 += 1;
                    }
                    post = post.update(arm, f + rng.sample::<f64, _>(StandardNormal))?;
                }
            }

            let gap = (f1 - f2).abs();
            let n_wrong = if f1 >= f2 { n2 } else { n1 };
            Ok(u64::from(gap * n_wrong as f64 >= horizon as f64 / 2.0))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    let p_hat = successes as f64 / n_mc as f64;
    Ok(LockinEstimate {
        horizon,
        n_mc,
        successes,
        p_hat,
        se: (p_hat * (1.0 - p_hat) / n_mc as f64).sqrt(),
    })
}

/// Estimates of the three events behind the heavy tail at one horizon.
///
/// `p_gap` is the prior probability that arm one clears the threshold
/// a = 4 sqrt(log T) while arm two beats it by at least one (estimated by
/// an exact tail decomposition, far below the reach of naive rejection).
/// `p_noise` is the probability that every prefix mean of the first
/// ceil(T/2) noise draws stays above minus one. `p_lockin_given` is the
/// probability that the streak survives ceil(T/2) steps, averaged over the
/// exact conditional distribution of the planted draw and the noise given
/// both events; `effective_samples` counts the conditional draws behind it
/// and trips `flagged` when fewer than one hundred were available.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EventEstimates {
    pub horizon: u64,
    pub n_mc: u64,
    pub threshold: f64,
    pub p_gap: f64,
    pub se_gap: f64,
    pub p_noise: f64,
    pub se_noise: f64,
    pub p_lockin_given: f64,
    pub se_lockin_given: f64,
    pub effective_samples: u64,
    pub flagged: bool,
}

impl EventEstimates {
    /// Product of the three estimates: a lower-bound proxy for the tail
    /// probability at this horizon.
    pub fn bound_product(&self) -> f64 {
        self.p_gap * self.p_noise * self.p_lockin_given
    }
}

/// Estimate the three tail events at horizon T > e with n_mc replications
/// per event.
pub fn event_probabilities(horizon: u64, n_mc: u64, master_seed: u64) -> Result<EventEstimates> {
    if (horizon as f64) <= std::f64::consts::E {
        return Err(Error::InvalidParam(format!(
            "event analysis needs horizon > e (got {horizon})"
        )));
    }
    if n_mc == 0 {
        return Err(Error::InvalidParam("n_mc must be >= 1".into()));
    }
    let a = 4.0 * (horizon as f64).ln().sqrt();
    let m = horizon.div_ceil(2);

    // Gap event: integrate the conditional tail of arm two over the
    // truncated distribution of arm one. The weight never exceeds its value
    // at the threshold, so the importance estimate is exact in expectation.
    let weights: Vec<f64> = (0..n_mc)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(master_seed, purpose_stream(PURPOSE_EVENT_GAP, rep));
            let f1 = sample_truncated_normal(a, &mut rng);
            gap_weight(f1)
        })
        .collect();
    let tail = phi_bar(a);
    let (w_mean, w_var) = mean_var(&weights);
    let p_gap = tail * w_mean;
    let se_gap = tail * (w_var / n_mc as f64).sqrt();

    // Noise event: plain Monte Carlo with early exit on the first violated
    // prefix.
    let noise_hits = (0..n_mc)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(master_seed, purpose_stream(PURPOSE_EVENT_NOISE, rep));
            let mut sum = 0.0;
            for k in 1..=m {
                sum += rng.sample::<f64, _>(StandardNormal);
                if sum < -(k as f64) {
                    return 0u64;
                }
            }
            1u64
        })
        .sum::<u64>();
    let p_noise = noise_hits as f64 / n_mc as f64;
    let se_noise = (p_noise * (1.0 - p_noise) / n_mc as f64).sqrt();

    // Lock-in given both events: draw (f1, noise) from their exact
    // conditional laws, then play the streak with fresh uniforms.
    let lockin_hits = (0..n_mc)
        .into_par_iter()
        .map(|rep| -> Result<u64> {
            let mut rng = stream_rng(master_seed, purpose_stream(PURPOSE_EVENT_COND, rep));
            let f1 = sample_f1_given_gap(a, &mut rng)?;
            let eps = sample_noise_given_event(m, &mut rng)?;
            let streak = lockin_streak(m, f1, |d| match d {
                Draw::Noise(i) => eps[i as usize],
                Draw::Uniform => rng.random(),
            });
            Ok(u64::from(streak.deviated_at.is_none()))
        })
        .try_reduce(|| 0, |x, y| Ok(x + y))?;
    let p_lockin = lockin_hits as f64 / n_mc as f64;
    let se_lockin = (p_lockin * (1.0 - p_lockin) / n_mc as f64).sqrt();

    Ok(EventEstimates {
        horizon,
        n_mc,
        threshold: a,
        p_gap,
        se_gap,
        p_noise,
        se_noise,
        p_lockin_given: p_lockin,
        se_lockin_given: se_lockin,
        effective_samples: n_mc,
        flagged: n_mc < 100,
    })
}

/// Conditional probability that arm two beats arm one by at least one,
/// given arm one's value: the arm-two tail at f1 + 1 under its conditional
/// law N(f1/2, 3/4).
fn gap_weight(f1: f64) -> f64 {
    phi_bar((0.5 * f1 + 1.0) / 0.75_f64.sqrt())
}

/// Draw from a standard normal conditioned on exceeding `a`. Uses the
/// shifted-exponential rejection scheme for positive thresholds, which stays
/// efficient arbitrarily deep in the tail, and plain resampling otherwise.
pub(crate) fn sample_truncated_normal<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a <= 0.0 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a {
                return z;
            }
        }
    }
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let u: f64 = rng.random();
        let x = a - (1.0 - u).ln() / lambda;
        let d = x - lambda;
        if rng.random::<f64>() <= (-0.5 * d * d).exp() {
            return x;
        }
    }
}

/// Draw arm one's value given the full gap event, by thinning the truncated
/// draw with the conditional weight (maximized at the threshold).
fn sample_f1_given_gap<R: Rng + ?Sized>(a: f64, rng: &mut R) -> Result<f64> {
    let w_max = gap_weight(a);
    if !(w_max > 0.0) {
        return Err(Error::InvalidParam(format!(
            "gap event is numerically unreachable at threshold {a:.3}"
        )));
    }
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let f1 = sample_truncated_normal(a, rng);
        if rng.random::<f64>() * w_max <= gap_weight(f1) {
            return Ok(f1);
        }
    }
    Err(Error::InvalidParam(
        "conditional sampler for the gap event stalled".into(),
    ))
}

/// Does every prefix mean of the noise stay at or above minus one?
fn noise_prefix_ok(eps: &[f64]) -> bool {
    let mut sum = 0.0;
    for (k, &e) in eps.iter().enumerate() {
        sum += e;
        if sum < -((k + 1) as f64) {
            return false;
        }
    }
    true
}

/// Draw a noise sequence of length m conditioned on the prefix-mean event by
/// rejection (the event has probability about 0.8, independent of m).
fn sample_noise_given_event<R: Rng + ?Sized>(m: u64, rng: &mut R) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let eps: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        if noise_prefix_ok(&eps) {
            return Ok(eps);
        }
    }
    Err(Error::InvalidParam(
        "conditional sampler for the noise event stalled".into(),
    ))
}

/// Which decay law fit a tail curve better.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Polynomial,
    Exponential,
}

/// Least-squares comparison of log p against log T (polynomial decay) and
/// against T (exponential decay).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of log p in log T; minus this is the fitted decay exponent.
    pub poly_slope: f64,
    pub poly_intercept: f64,
    pub poly_rss: f64,
    /// Slope of log p in T.
    pub exp_rate: f64,
    pub exp_intercept: f64,
    pub exp_rss: f64,
    pub preferred: FitModel,
}

impl DecayFit {
    /// The fitted polynomial decay exponent c with p ~ T^{-c}.
    pub fn poly_decay_exponent(&self) -> f64 {
        -self.poly_slope
    }
}

/// Fit both decay laws to tail estimates (horizon, p_hat). Requires at least
/// four horizons and strictly positive estimates.
pub fn decay_fit(estimates: &[(u64, f64)]) -> Result<DecayFit> {
    if estimates.len() < 4 {
        return Err(Error::InvalidParam(format!(
            "decay fitting needs at least 4 horizons (got {})",
            estimates.len()
        )));
    }
    for &(t, p) in estimates {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParam(format!(
                "tail estimate at horizon {t} is {p}; every estimate must be positive \
                 (increase the Monte Carlo budget, e.g. --n-mc)"
            )));
        }
    }
    let log_p: Vec<f64> = estimates.iter().map(|&(_, p)| p.ln()).collect();
    let log_t: Vec<f64> = estimates.iter().map(|&(t, _)| (t as f64).ln()).collect();
    let lin_t: Vec<f64> = estimates.iter().map(|&(t, _)| t as f64).collect();
    let (poly_slope, poly_intercept, poly_rss) = least_squares_line(&log_t, &log_p)?;
    let (exp_rate, exp_intercept, exp_rss) = least_squares_line(&lin_t, &log_p)?;
    Ok(DecayFit {
        poly_slope,
        poly_intercept,
        poly_rss,
        exp_rate,
        exp_intercept,
        exp_rss,
        preferred: if poly_rss <= exp_rss {
            FitModel::Polynomial
        } else {
            FitModel::Exponential
        },
    })
}

/// Simple linear regression returning (slope, intercept, rss).
pub(crate) fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParam(
            "regression abscissae are all identical".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok((slope, intercept, rss))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn two_arm_prior_posterior() -> Result<Posterior> {
    let domain = Arc::new(Domain::indexed(2)?);
    let kernel = Arc::new(Kernel::fixed_gram(DMatrix::from_row_slice(
        2,
        2,
        &[1.0, 0.5, 0.5, 1.0],
    ))?);
    Posterior::prior(domain, kernel, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn phi_frozen_battery() {
        let cases = [
            (0.0, 0.5),
            (1.0, 0.84134474606854293),
            (-1.0, 0.15865525393145707),
            (0.5, 0.69146246127401312),
            (-2.3, 0.010724110021675809),
            (3.5, 0.99976737092096446),
            (-3.5, 0.00023262907903552502),
            (0.8944271909999159, 0.81445331523865128),
        ];
        for (x, expected) in cases {
            assert_abs_diff_eq!(phi(x), expected, epsilon = 1e-13);
        }
        // Deep tails must hold relative precision, not just absolute.
        let tail = phi(-8.0);
        assert!((tail / 6.2209605742717405e-16 - 1.0).abs() < 1e-10);
        assert!((phi_bar(8.0) / 6.2209605742717405e-16 - 1.0).abs() < 1e-10);
        assert_abs_diff_eq!(phi(8.0), 0.99999999999999933, epsilon = 1e-15);
    }

    #[test]
    fn two_arm_posterior_frozen_values() {
        let (mean, cov) = two_arm_posterior(0, 123.0);
        assert_eq!(mean[0], 0.0);
        assert_eq!(cov[(0, 1)], 0.5);

        let (mean, cov) = two_arm_posterior(1, 2.0);
        assert_abs_diff_eq!(mean[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mean[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[(0, 1)], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[(1, 1)], 0.875, epsilon = 1e-15);

        let (mean, cov) = two_arm_posterior(4, 2.0);
        assert_abs_diff_eq!(mean[0], 1.6, epsilon = 1e-15);
        assert_abs_diff_eq!(mean[1], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[(0, 0)], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[(0, 1)], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[(1, 1)], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn choice_probability_frozen_values() {
        assert_eq!(choice_probability(0, 5.0), 0.5);
        assert_abs_diff_eq!(
            choice_probability(4, 2.0),
            0.81445331523865128,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            choice_probability(10, -1.0),
            0.30254747322700604,
            epsilon = 1e-13
        );
        // Monotone in the running mean, saturating at certainty.
        let mut prev = 0.0;
        for i in 0..8 {
            let p = choice_probability(5, -2.0 + i as f64);
            assert!(p > prev);
            prev = p;
        }
        assert!(choice_probability(50, 40.0) > 1.0 - 1e-12);
    }

    #[test]
    fn truncated_sampler_matches_tail_moments() {
        // Negative threshold: compare with the closed-form conditional mean
        // pdf(a) / tail(a).
        let mut rng = stream_rng(7, 0);
        let a = -1.0;
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_truncated_normal(a, &mut rng);
            assert!(x >= a);
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let sd = (s2 / n as f64 - mean * mean).sqrt();
        let pdf_a = (-0.5_f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let expected = pdf_a / phi_bar(a);
        assert_abs_diff_eq!(mean, expected, epsilon = 4.0 * sd / (n as f64).sqrt());

        // Deep tail: frozen conditional mean at the threshold used by the
        // event analysis at horizon 10.
        let a = 6.0697085175405858;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_truncated_normal(a, &mut rng);
            assert!(x >= a);
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let sd = (s2 / n as f64 - mean * mean).sqrt();
        assert_abs_diff_eq!(
            mean,
            6.2265357119003539,
            epsilon = 4.0 * sd / (n as f64).sqrt()
        );
    }

    #[test]
    fn streak_probability_matches_path_product() {
        // Freeze the planted value and the noise; the probability that the
        // streak survives is then the product of the choice probabilities
        // along the deterministic mean path, which the uniform coupling must
        // reproduce.
        let f1 = 2.0;
        let m = 8u64;
        let mut rng = stream_rng(99, 0);
        let eps: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();

        let mut product = 1.0;
        let mut sum = 0.0;
        for t in 0..m {
            let ybar = if t == 0 { 0.0 } else { sum / t as f64 };
            product *= choice_probability(t, ybar);
            sum += f1 + eps[t as usize];
        }

        let n = 200_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let outcome = lockin_streak(m, f1, |d| match d {
                Draw::Noise(i) => eps[i as usize],
                Draw::Uniform => rng.random(),
            });
            if outcome.deviated_at.is_none() {
                assert_eq!(outcome.pulls, m);
                hits += 1;
            }
        }
        let emp = hits as f64 / n as f64;
        let se = (product * (1.0 - product) / n as f64).sqrt();
        assert_abs_diff_eq!(emp, product, epsilon = 4.0 * se);
    }

    #[test]
    fn streak_bookkeeping() {
        // A uniform draw of 1.0 never beats any probability, so the streak
        // deviates immediately; a draw of 0.0 always does.
        let out = lockin_streak(5, 0.0, |d| match d {
            Draw::Noise(_) => 0.0,
            Draw::Uniform => 0.9999999,
        });
        assert_eq!(out.deviated_at, Some(1));
        assert_eq!(out.pulls, 0);

        let out = lockin_streak(5, 1.5, |d| match d {
            Draw::Noise(_) => 0.0,
            Draw::Uniform => 0.0,
        });
        assert_eq!(out.deviated_at, None);
        assert_eq!(out.pulls, 5);
        assert_abs_diff_eq!(out.sum_y, 7.5, epsilon = 1e-12);
    }

    #[test]
    fn lockin_estimate_matches_independent_pilot() {
        // An independent vectorized implementation put Pr(R_8 >= 4) at
        // 0.1330 +/- 0.0004; agree within combined uncertainty.
        let est = simulate_lockin(8, 20_000, 2024).unwrap();
        assert_eq!(est.n_mc, 20_000);
        assert_eq!(est.successes as f64, est.p_hat * 20_000.0);
        assert_abs_diff_eq!(est.p_hat, 0.1330, epsilon = 0.012);

        let again = simulate_lockin(8, 20_000, 2024).unwrap();
        assert_eq!(est.successes, again.successes);
    }

    #[test]
    fn lockin_probability_decreases_with_horizon() {
        let a = simulate_lockin(8, 30_000, 5).unwrap();
        let b = simulate_lockin(16, 30_000, 5).unwrap();
        let slack = 3.0 * (a.se + b.se);
        assert!(b.p_hat < a.p_hat + slack);
        assert!(a.p_hat > 0.0 && b.p_hat > 0.0);
    }

    #[test]
    fn noise_event_prefix_logic() {
        assert!(noise_prefix_ok(&[-0.5, -1.2]));
        assert!(!noise_prefix_ok(&[-1.5]));
        assert!(!noise_prefix_ok(&[0.0, -2.6]));
        assert!(noise_prefix_ok(&[]));
    }

    #[test]
    fn event_probabilities_match_oracles() {
        // Quadrature on the exact decomposition gives Pr(gap event) at
        // horizon 10 as 7.0264123246e-16.
        let est = event_probabilities(10, 20_000, 31).unwrap();
        assert!((est.p_gap / 7.0264123246e-16 - 1.0).abs() < 0.02);
        assert!((est.p_gap - 7.0264123246e-16).abs() <= 4.0 * est.se_gap);
        assert!(est.p_noise > 0.77 && est.p_noise < 0.83);
        assert!(!est.flagged);
        assert_abs_diff_eq!(est.threshold, 6.0697085175405858, epsilon = 1e-12);

        // Pilot value for the conditional lock-in probability at horizon 16.
        let est = event_probabilities(16, 10_000, 31).unwrap();
        assert_abs_diff_eq!(est.p_lockin_given, 0.477, epsilon = 0.03);
        assert!(est.p_lockin_given >= 2.0_f64.powi(-11));
    }

    #[test]
    fn event_probabilities_rejects_tiny_horizons() {
        assert!(event_probabilities(2, 100, 0).is_err());
        assert!(event_probabilities(3, 100, 0).is_ok());
    }

    #[test]
    fn decay_fit_recovers_exact_laws() {
        // Perfect polynomial decay: p = 100 T^{-2}.
        let poly: Vec<(u64, f64)> = [8u64, 16, 32, 64]
            .iter()
            .map(|&t| (t, 100.0 * (t as f64).powi(-2)))
            .collect();
        let fit = decay_fit(&poly).unwrap();
        assert_eq!(fit.preferred, FitModel::Polynomial);
        assert_abs_diff_eq!(fit.poly_slope, -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.poly_decay_exponent(), 2.0, epsilon = 1e-10);
        assert!(fit.poly_rss < 1e-18);

        // Perfect exponential decay: p = e^{-0.3 T}.
        let expo: Vec<(u64, f64)> = [8u64, 16, 32, 64]
            .iter()
            .map(|&t| (t, (-0.3 * t as f64).exp()))
            .collect();
        let fit = decay_fit(&expo).unwrap();
        assert_eq!(fit.preferred, FitModel::Exponential);
        assert_abs_diff_eq!(fit.exp_rate, -0.3, epsilon = 1e-10);
        assert!(fit.exp_rss < 1e-18);
    }

    #[test]
    fn decay_fit_input_validation() {
        assert!(decay_fit(&[(8, 0.1), (16, 0.05), (32, 0.02)]).is_err());
        let err = decay_fit(&[(8, 0.1), (16, 0.0), (32, 0.01), (64, 0.005)]).unwrap_err();
        assert!(err.to_string().contains("n-mc"));
    }

    #[test]
    fn simulate_lockin_input_validation() {
        assert!(simulate_lockin(0, 10, 0).is_err());
        assert!(simulate_lockin(10, 0, 0).is_err());
        let est = simulate_lockin(4, 1, 0).unwrap();
        assert!(est.p_hat == 0.0 || est.p_hat == 1.0);
    }
}
