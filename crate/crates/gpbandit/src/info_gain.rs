//! Information gain of observation sets and maximum-information-gain curves.
//!
//! The information gain of a multiset A of points is half the log determinant
//! of I + noise^{-1} K_A. Rather than building the |A| x |A| matrix, we use
//! the equivalent compressed form over the distinct points: with multiplicity
//! m_x for each distinct x, the determinant equals that of
//! I + noise^{-1} diag(sqrt(m)) K diag(sqrt(m)), which stays small however
//! often points repeat. The exact maximum enumerates multisets (with a size
//! guard); the greedy curve selects the highest-variance point each round and
//! is within (1 - 1/e) of the exact maximum by submodularity.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::{jittered_cholesky, Posterior};
use crate::kernel::Kernel;

/// Largest number of multisets the exact maximizer will enumerate for a
/// single horizon.
const MAX_MULTISETS_PER_HORIZON: u128 = 5_000_000;

/// How a maximum-information-gain curve was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MigMethod {
    /// Exhaustive maximum over multisets.
    Exact,
    /// Greedy lower bound, within (1 - 1/e) of exact.
    Greedy,
}

impl fmt::Display for MigMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MigMethod::Exact => write!(f, "exact"),
            MigMethod::Greedy => write!(f, "greedy"),
        }
    }
}

/// A curve gamma_0, ..., gamma_T of information-gain values. gamma_0 is zero
/// and the curve is nondecreasing.
#[derive(Clone, Debug)]
pub struct MigCurve {
    values: Vec<f64>,
    method: MigMethod,
}

impl MigCurve {
    /// Wrap precomputed values, validating the shape invariants.
    pub fn new(values: Vec<f64>, method: MigMethod) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("a gain curve needs at least gamma_0".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParam(format!(
                "gamma_0 must be exactly zero (got {})",
                values[0]
            )));
        }
        for w in values.windows(2) {
            if !w[1].is_finite() || w[1] < w[0] - 1e-9 {
                return Err(Error::InvalidParam(format!(
                    "gain curve must be finite and nondecreasing (got {} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(MigCurve { values, method })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest integer time the curve covers.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn method(&self) -> MigMethod {
        self.method
    }

    /// gamma_T, the final value of the curve.
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Information gain of a multiset given as occurrence counts per domain
/// index.
pub fn info_gain_of_multiset(
    kernel: &Kernel,
    noise_var: f64,
    domain: &Domain,
    counts: &[usize],
) -> Result<f64> {
    check_noise(noise_var)?;
    if counts.len() != domain.len() {
        return Err(Error::DimensionMismatch(format!(
            "counts vector has length {} but the domain has {} points",
            counts.len(),
            domain.len()
        )));
    }
    let support: Vec<(usize, usize)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c))
        .collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    let pts: Vec<Vec<f64>> = support.iter().map(|&(i, _)| domain.point(i).to_vec()).collect();
    let k = kernel.gram(&pts)?;
    let dense: Vec<(usize, usize)> = (0..support.len()).map(|p| (p, support[p].1)).collect();
    capacity_of_support(&k, 1.0 / noise_var, &dense)
}

/// Information gain of a sequence of domain indices (order and duplication
/// beyond counts do not matter).
pub fn info_gain_of_indices(
    kernel: &Kernel,
    noise_var: f64,
    domain: &Domain,
    indices: &[usize],
) -> Result<f64> {
    let mut counts = vec![0usize; domain.len()];
    for &i in indices {
        if i >= domain.len() {
            return Err(Error::OutOfRange(format!(
                "index {i} is outside the domain of {} points",
                domain.len()
            )));
        }
        counts[i] += 1;
    }
    info_gain_of_multiset(kernel, noise_var, domain, &counts)
}

/// Information gain of an explicit point multiset. Points that are bitwise
/// equal are grouped into multiplicities.
pub fn info_gain_of_set(kernel: &Kernel, noise_var: f64, points: &[Vec<f64>]) -> Result<f64> {
    check_noise(noise_var)?;
    if points.is_empty() {
        return Ok(0.0);
    }
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for p in points {
        match distinct.iter().position(|q| bits_equal(q, p)) {
            Some(i) => counts[i] += 1,
            None => {
                distinct.push(p.clone());
                counts.push(1);
            }
        }
    }
    let k = kernel.gram(&distinct)?;
    let dense: Vec<(usize, usize)> = counts.iter().copied().enumerate().collect();
    capacity_of_support(&k, 1.0 / noise_var, &dense)
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Exact maximum information gain gamma_t for every t up to the horizon, by
/// enumerating multisets in compressed form. Guarded: each horizon may
/// enumerate at most five million multisets.
pub fn mig_exact(
    kernel: &Kernel,
    noise_var: f64,
    domain: &Domain,
    horizon: usize,
) -> Result<MigCurve> {
    check_noise(noise_var)?;
    check_horizon(horizon)?;
    let n = domain.len();
    for t in 1..=horizon {
        let count = multiset_count(n, t);
        if count > MAX_MULTISETS_PER_HORIZON {
            return Err(Error::SizeGuard(format!(
                "exact maximization at horizon {t} would enumerate {count} multisets \
                 over {n} points (limit {MAX_MULTISETS_PER_HORIZON}); use the greedy curve"
            )));
        }
    }
    let k = kernel.gram(domain.points())?;
    let inv_noise = 1.0 / noise_var;
    let mut values = vec![0.0];
    for t in 1..=horizon {
        let mut best = f64::NEG_INFINITY;
        let mut support: Vec<(usize, usize)> = Vec::new();
        enumerate_compositions(&k, inv_noise, n, 0, t, &mut support, &mut best)?;
        values.push(best);
    }
    MigCurve::new(values, MigMethod::Exact)
}

/// Greedy information-gain curve: each round observes the point of highest
/// posterior variance (ties toward the lowest index). Variances do not
/// depend on the observed values, so the recursion runs on a posterior fed
/// with zeros.
pub fn mig_greedy(
    kernel: &Kernel,
    noise_var: f64,
    domain: &Domain,
    horizon: usize,
) -> Result<MigCurve> {
    check_noise(noise_var)?;
    check_horizon(horizon)?;
    let mut post = Posterior::prior(
        std::sync::Arc::new(domain.clone()),
        std::sync::Arc::new(kernel.clone()),
        noise_var,
    )?;
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(0.0);
    let mut total = 0.0;
    for _ in 0..horizon {
        let mut best_i = 0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..domain.len() {
            let v = post.variance(i);
            if v > best_v {
                best_v = v;
                best_i = i;
            }
        }
        total += 0.5 * (1.0 + best_v.max(0.0) / noise_var).ln();
        values.push(total);
        post = post.update(best_i, 0.0)?;
    }
    MigCurve::new(values, MigMethod::Greedy)
}

/// Piecewise-linear interpolation of a gain curve at a real time t within
/// [0, horizon]. Integer times return the stored value exactly.
pub fn gamma_tilde(curve: &MigCurve, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 || t > curve.horizon() as f64 {
        return Err(Error::OutOfRange(format!(
            "gamma_tilde argument {t} is outside [0, {}]",
            curve.horizon()
        )));
    }
    if t.fract() == 0.0 {
        return Ok(curve.values[t as usize]);
    }
    let k = t.floor() as usize;
    Ok(curve.values[k] + (curve.values[k + 1] - curve.values[k]) * (t - k as f64))
}

/// Like `gamma_tilde`, but times beyond the horizon extrapolate linearly at
/// the curve's final slope. The flag reports whether extrapolation was used.
pub fn gamma_tilde_extended(curve: &MigCurve, t: f64) -> Result<(f64, bool)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::OutOfRange(format!(
            "gamma_tilde argument {t} must be a finite nonnegative time"
        )));
    }
    let h = curve.horizon() as f64;
    if t <= h {
        return Ok((gamma_tilde(curve, t)?, false));
    }
    let slope = if curve.horizon() >= 1 {
        curve.values[curve.horizon()] - curve.values[curve.horizon() - 1]
    } else {
        0.0
    };
    Ok((curve.last() + slope * (t - h), true))
}

/// The constant C1 = 2 / log(1 + noise^{-1}) relating summed posterior
/// variances to information gain.
pub fn c1(noise_var: f64) -> Result<f64> {
    check_noise(noise_var)?;
    Ok(2.0 / (1.0 + 1.0 / noise_var).ln())
}

/// Analytic growth-rate envelope d log T for the linear kernel. Reference
/// shape only, not a certified numeric bound.
pub fn reference_rate_linear(d: usize, t: f64) -> f64 {
    d as f64 * t.ln()
}

/// Analytic growth-rate envelope (log T)^{d+1} for the squared-exponential
/// kernel. Reference shape only, not a certified numeric bound.
pub fn reference_rate_se(d: usize, t: f64) -> f64 {
    t.ln().powi(d as i32 + 1)
}

/// Analytic growth-rate envelope T^{d/(2 nu + d)} (log T)^{(4 nu + d)/(2 nu + d)}
/// for Matern kernels. Reference shape only, not a certified numeric bound.
pub fn reference_rate_matern(nu: f64, d: usize, t: f64) -> f64 {
    let d = d as f64;
    t.powf(d / (2.0 * nu + d)) * t.ln().powf((4.0 * nu + d) / (2.0 * nu + d))
}

fn check_noise(noise_var: f64) -> Result<()> {
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidParam(format!(
            "noise variance must be positive and finite (got {noise_var})"
        )));
    }
    Ok(())
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParam("gain curve horizon must be >= 1".into()));
    }
    Ok(())
}

/// Half log determinant of I + inv_noise * diag(sqrt(c)) K diag(sqrt(c))
/// restricted to the support entries (index-into-k, count).
fn capacity_of_support(
    k: &DMatrix<f64>,
    inv_noise: f64,
    support: &[(usize, usize)],
) -> Result<f64> {
    let s = support.len();
    let mut a = DMatrix::zeros(s, s);
    for p in 0..s {
        let (ip, cp) = support[p];
        let sp = (cp as f64).sqrt();
        for q in 0..=p {
            let (iq, cq) = support[q];
            let v = inv_noise * sp * (cq as f64).sqrt() * k[(ip, iq)];
            a[(p, q)] = v;
            a[(q, p)] = v;
        }
        a[(p, p)] += 1.0;
    }
    let (l, _) = jittered_cholesky(&a)?;
    Ok((0..s).map(|i| l[(i, i)].ln()).sum())
}

/// Number of multisets of size t over n points: C(n + t - 1, t), saturating.
fn multiset_count(n: usize, t: usize) -> u128 {
    let mut res: u128 = 1;
    for i in 1..=t {
        res = match res.checked_mul((n + i - 1) as u128) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
        if res > MAX_MULTISETS_PER_HORIZON * 2 {
            return res;
        }
    }
    res
}

/// Walk all compositions of `remaining` observations across points pos..n,
/// tracking the nonzero support, and record the best capacity seen.
fn enumerate_compositions(
    k: &DMatrix<f64>,
    inv_noise: f64,
    n: usize,
    pos: usize,
    remaining: usize,
    support: &mut Vec<(usize, usize)>,
    best: &mut f64,
) -> Result<()> {
    if pos == n - 1 {
        if remaining > 0 {
            support.push((pos, remaining));
        }
        let v = capacity_of_support(k, inv_noise, support)?;
        if v > *best {
            *best = v;
        }
        if remaining > 0 {
            support.pop();
        }
        return Ok(());
    }
    for c in 0..=remaining {
        if c > 0 {
            support.push((pos, c));
        }
        enumerate_compositions(k, inv_noise, n, pos + 1, remaining - c, support, best)?;
        if c > 0 {
            support.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_point_kernel() -> (Kernel, Domain) {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        (Kernel::fixed_gram(m).unwrap(), Domain::indexed(2).unwrap())
    }

    fn se_three_point() -> (Kernel, Domain) {
        (
            Kernel::se(0.5).unwrap(),
            Domain::from_points(vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap(),
        )
    }

    #[test]
    fn exact_curve_frozen_two_point() {
        let (k, d) = two_point_kernel();
        let curve = mig_exact(&k, 1.0, &d, 3).unwrap();
        let expected = [
            0.0,
            0.34657359027997264,
            0.66087791999115963,
            0.85237404611921264,
        ];
        for (v, e) in curve.values().iter().zip(expected) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-10);
        }
        assert_eq!(curve.method(), MigMethod::Exact);
    }

    #[test]
    fn exact_curve_frozen_se_three_point() {
        let (k, d) = se_three_point();
        let curve = mig_exact(&k, 0.25, &d, 3).unwrap();
        let expected = [
            0.0,
            0.80471895621705014,
            1.6035422857894908,
            2.131669288142263,
        ];
        for (v, e) in curve.values().iter().zip(expected) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn repeated_single_point_gain() {
        let k = Kernel::fixed_gram(DMatrix::identity(1, 1)).unwrap();
        let d = Domain::indexed(1).unwrap();
        // Two unit-variance observations of one point at unit noise carry
        // half log 3 nats.
        let g = info_gain_of_indices(&k, 1.0, &d, &[0, 0]).unwrap();
        assert_abs_diff_eq!(g, 0.5 * 3.0_f64.ln(), epsilon = 1e-12);
        let curve = mig_exact(&k, 1.0, &d, 2).unwrap();
        assert_abs_diff_eq!(curve.values()[1], 0.5 * 2.0_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(curve.values()[2], 0.5 * 3.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn compressed_capacity_matches_naive_determinant() {
        // The compressed form must agree with the literal |A| x |A|
        // determinant, computed here without any grouping.
        let (k, d) = se_three_point();
        let noise = 0.3;
        let indices = [0usize, 1, 1, 2, 2, 2, 0];
        let fast = info_gain_of_indices(&k, noise, &d, &indices).unwrap();

        let t = indices.len();
        let mut big = DMatrix::zeros(t, t);
        for (p, &i) in indices.iter().enumerate() {
            for (q, &j) in indices.iter().enumerate() {
                big[(p, q)] = k.eval(d.point(i), d.point(j)).unwrap() / noise;
            }
            big[(p, p)] += 1.0;
        }
        let naive: f64 = nalgebra::Cholesky::new(big)
            .unwrap()
            .l()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum();
        assert_abs_diff_eq!(fast, naive, epsilon = 1e-10);
    }

    #[test]
    fn set_and_index_routes_agree() {
        let (k, d) = se_three_point();
        let indices = [2usize, 0, 2];
        let by_idx = info_gain_of_indices(&k, 0.5, &d, &indices).unwrap();
        let pts: Vec<Vec<f64>> = indices.iter().map(|&i| d.point(i).to_vec()).collect();
        let by_set = info_gain_of_set(&k, 0.5, &pts).unwrap();
        assert_abs_diff_eq!(by_idx, by_set, epsilon = 1e-12);
        assert_eq!(info_gain_of_set(&k, 0.5, &[]).unwrap(), 0.0);
    }

    #[test]
    fn greedy_is_sandwiched_by_exact() {
        let cases: Vec<(Kernel, Domain)> = vec![
            two_point_kernel(),
            se_three_point(),
            (
                Kernel::matern(0.4, crate::kernel::MaternNu::ThreeHalves).unwrap(),
                Domain::grid(1, 1.0, 5).unwrap(),
            ),
        ];
        for (k, d) in cases {
            for noise in [0.25, 1.0] {
                let exact = mig_exact(&k, noise, &d, 4).unwrap();
                let greedy = mig_greedy(&k, noise, &d, 4).unwrap();
                let factor = 1.0 - (-1.0_f64).exp();
                for t in 1..=4 {
                    let e = exact.values()[t];
                    let g = greedy.values()[t];
                    assert!(g <= e + 1e-10, "greedy exceeded exact at t={t}");
                    assert!(
                        g >= factor * e - 1e-10,
                        "greedy fell below the (1-1/e) guarantee at t={t}"
                    );
                }
                assert_abs_diff_eq!(exact.values()[1], greedy.values()[1], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn exact_increments_are_nonincreasing() {
        let (k, d) = se_three_point();
        let curve = mig_exact(&k, 0.25, &d, 5).unwrap();
        let v = curve.values();
        for t in 2..v.len() {
            assert!(v[t] - v[t - 1] <= v[t - 1] - v[t - 2] + 1e-10);
        }
    }

    #[test]
    fn enumeration_guard_trips_on_large_domains() {
        let k = Kernel::se(0.2).unwrap();
        let d = Domain::grid(1, 1.0, 50).unwrap();
        assert!(matches!(mig_exact(&k, 1.0, &d, 6), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn gamma_tilde_interpolation() {
        let curve = MigCurve::new(vec![0.0, 1.0, 1.5, 1.75], MigMethod::Exact).unwrap();
        // Integer times are returned bitwise.
        assert_eq!(gamma_tilde(&curve, 2.0).unwrap(), 1.5);
        assert_eq!(gamma_tilde(&curve, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(gamma_tilde(&curve, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gamma_tilde(&curve, 2.25).unwrap(), 1.5625, epsilon = 1e-15);
        assert!(gamma_tilde(&curve, -0.1).is_err());
        assert!(gamma_tilde(&curve, 3.1).is_err());

        let (v, ext) = gamma_tilde_extended(&curve, 2.5).unwrap();
        assert!(!ext);
        assert_abs_diff_eq!(v, 1.625, epsilon = 1e-15);
        let (v, ext) = gamma_tilde_extended(&curve, 5.0).unwrap();
        assert!(ext);
        assert_abs_diff_eq!(v, 1.75 + 0.25 * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn c1_frozen_values() {
        assert_abs_diff_eq!(c1(1.0).unwrap(), 2.8853900817779268, epsilon = 1e-13);
        assert_abs_diff_eq!(c1(0.01).unwrap(), 0.43335813067106332, epsilon = 1e-13);
        let noise = 1.0 / (std::f64::consts::E.powi(2) - 1.0);
        assert_abs_diff_eq!(c1(noise).unwrap(), 1.0, epsilon = 1e-13);
        assert!(c1(0.0).is_err());
    }

    #[test]
    fn curve_validation() {
        assert!(MigCurve::new(vec![], MigMethod::Exact).is_err());
        assert!(MigCurve::new(vec![0.1], MigMethod::Exact).is_err());
        assert!(MigCurve::new(vec![0.0, 1.0, 0.5], MigMethod::Exact).is_err());
        assert!(MigCurve::new(vec![0.0, f64::NAN], MigMethod::Exact).is_err());
        let c = MigCurve::new(vec![0.0], MigMethod::Greedy).unwrap();
        assert_eq!(c.horizon(), 0);
        assert_eq!(gamma_tilde_extended(&c, 3.0).unwrap(), (0.0, true));
    }

    proptest! {
        #[test]
        fn gamma_tilde_is_midpoint_concave_on_concave_curves(
            increments in proptest::collection::vec(0.01..1.0_f64, 2..12),
        ) {
            // Build a concave nondecreasing curve by sorting increments in
            // decreasing order.
            let mut inc = increments;
            inc.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut values = vec![0.0];
            for d in &inc {
                values.push(values.last().unwrap() + d);
            }
            let curve = MigCurve::new(values, MigMethod::Exact).unwrap();
            let h = curve.horizon() as f64;
            for (s, t) in [(0.0, h), (0.25 * h, 0.75 * h), (0.5, h - 0.25)] {
                if s >= 0.0 && t <= h && s <= t {
                    let mid = gamma_tilde(&curve, 0.5 * (s + t)).unwrap();
                    let avg = 0.5 * (gamma_tilde(&curve, s).unwrap() + gamma_tilde(&curve, t).unwrap());
                    prop_assert!(mid >= avg - 1e-9);
                }
            }
        }

        #[test]
        fn gamma_tilde_integer_times_are_exact(
            raw in proptest::collection::vec(0.0..2.0_f64, 1..10),
        ) {
            let mut values = vec![0.0];
            for d in &raw {
                values.push(values.last().unwrap() + d);
            }
            let curve = MigCurve::new(values.clone(), MigMethod::Greedy).unwrap();
            for (t, v) in values.iter().enumerate() {
                let g = gamma_tilde(&curve, t as f64).unwrap();
                prop_assert_eq!(g.to_bits(), v.to_bits());
            }
        }
    }
}
