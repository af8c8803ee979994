//! Exact Gaussian-process posteriors over a finite domain.
//!
//! A `Posterior` carries the full posterior mean vector and covariance matrix
//! over the domain, plus the Cholesky factor of the observation Gram matrix.
//! It can be built in one shot from a dataset or advanced one observation at
//! a time; the incremental route costs O(n^2 + t) per step instead of
//! refactorizing, and the two routes agree to solver precision.
//!
//! Values are immutable in the functional sense: `update` consumes the old
//! posterior and returns the new one, so independent simulation threads can
//! each own their chain without locking.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Observations as parallel index/value lists. Indices refer to domain
/// points; repeats are allowed.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Dataset {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Self {
        Dataset { indices, values }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn validate(&self, n_domain: usize) -> Result<()> {
        if self.indices.len() != self.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "dataset has {} indices but {} values",
                self.indices.len(),
                self.values.len()
            )));
        }
        for &i in &self.indices {
            if i >= n_domain {
                return Err(Error::OutOfRange(format!(
                    "dataset index {i} is outside the domain of {n_domain} points"
                )));
            }
        }
        for &y in &self.values {
            if !y.is_finite() {
                return Err(Error::InvalidParam("dataset contains a non-finite value".into()));
            }
        }
        Ok(())
    }
}

/// Gaussian-process posterior over every point of a finite domain.
#[derive(Clone, Debug)]
pub struct Posterior {
    domain: Arc<Domain>,
    kernel: Arc<Kernel>,
    noise_var: f64,
    obs_indices: Vec<usize>,
    obs_values: Vec<f64>,
    /// Packed lower-triangular rows of chol(K_t + noise I); row i has i+1
    /// entries.
    chol_rows: Vec<Vec<f64>>,
    /// Whitened observations L^{-1} y.
    white_y: Vec<f64>,
    /// Rows of V = L^{-1} K_{t,domain}, each of length n.
    v_rows: Vec<Vec<f64>>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Posterior {
    /// Prior over the domain: zero mean, covariance equal to the Gram matrix.
    pub fn prior(domain: Arc<Domain>, kernel: Arc<Kernel>, noise_var: f64) -> Result<Self> {
        check_noise(noise_var)?;
        let cov = kernel.gram(domain.points())?;
        let n = domain.len();
        Ok(Posterior {
            domain,
            kernel,
            noise_var,
            obs_indices: Vec::new(),
            obs_values: Vec::new(),
            chol_rows: Vec::new(),
            white_y: Vec::new(),
            v_rows: Vec::new(),
            mean: DVector::zeros(n),
            cov,
        })
    }

    /// Batch posterior from a dataset, via one Cholesky factorization of the
    /// noisy observation Gram matrix.
    pub fn posterior(
        domain: Arc<Domain>,
        kernel: Arc<Kernel>,
        noise_var: f64,
        data: &Dataset,
    ) -> Result<Self> {
        check_noise(noise_var)?;
        data.validate(domain.len())?;
        if data.is_empty() {
            return Posterior::prior(domain, kernel, noise_var);
        }
        let n = domain.len();
        let t = data.len();
        let obs_points: Vec<Vec<f64>> = data
            .indices
            .iter()
            .map(|&i| domain.point(i).to_vec())
            .collect();
        let mut k_obs = kernel.gram(&obs_points)?;
        for i in 0..t {
            k_obs[(i, i)] += noise_var;
        }
        let (l, _) = jittered_cholesky(&k_obs)?;

        let mut k_cross = DMatrix::zeros(t, n);
        for i in 0..t {
            for j in 0..n {
                k_cross[(i, j)] = kernel.eval(&obs_points[i], domain.point(j))?;
            }
        }
        let v = l
            .solve_lower_triangular(&k_cross)
            .ok_or(Error::CholeskyFailure { max_jitter: 0.0 })?;
        let y = DVector::from_column_slice(&data.values);
        let white = l
            .solve_lower_triangular(&y)
            .ok_or(Error::CholeskyFailure { max_jitter: 0.0 })?;

        let mean = v.tr_mul(&white);
        let mut cov = kernel.gram(domain.points())? - v.tr_mul(&v);
        symmetrize(&mut cov);

        let chol_rows = (0..t)
            .map(|i| (0..=i).map(|j| l[(i, j)]).collect())
            .collect();
        let v_rows = (0..t).map(|i| v.row(i).iter().copied().collect()).collect();
        Ok(Posterior {
            domain,
            kernel,
            noise_var,
            obs_indices: data.indices.clone(),
            obs_values: data.values.clone(),
            chol_rows,
            white_y: white.iter().copied().collect(),
            v_rows,
            mean,
            cov,
        })
    }

    /// Condition on one more observation `y` at domain point `index`,
    /// extending the Cholesky factor by a single row. Consumes the old
    /// posterior; clone first if both are needed.
    pub fn update(mut self, index: usize, y: f64) -> Result<Self> {
        let n = self.domain.len();
        if index >= n {
            return Err(Error::OutOfRange(format!(
                "update index {index} is outside the domain of {n} points"
            )));
        }
        if !y.is_finite() {
            return Err(Error::InvalidParam("observation must be finite".into()));
        }
        let d2 = self.cov[(index, index)] + self.noise_var;
        if !(d2 > 0.0) || !d2.is_finite() {
            return Err(Error::CholeskyFailure { max_jitter: 0.0 });
        }
        let d = d2.sqrt();

        // New Cholesky row: the off-diagonal part is column `index` of V,
        // the diagonal entry is the predictive standard deviation at the
        // observation.
        let mut chol_row: Vec<f64> = self.v_rows.iter().map(|r| r[index]).collect();
        chol_row.push(d);

        let v_new = DVector::from_fn(n, |j, _| self.cov[(index, j)] / d);
        let w = (y - self.mean[index]) / d;

        self.mean.axpy(w, &v_new, 1.0);
        self.cov.ger(-1.0, &v_new, &v_new, 1.0);

        self.chol_rows.push(chol_row);
        self.white_y.push(w);
        self.v_rows.push(v_new.iter().copied().collect());
        self.obs_indices.push(index);
        self.obs_values.push(y);
        Ok(self)
    }

    pub fn n_obs(&self) -> usize {
        self.obs_indices.len()
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn kernel(&self) -> &Arc<Kernel> {
        &self.kernel
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn obs_indices(&self) -> &[usize] {
        &self.obs_indices
    }

    pub fn obs_values(&self) -> &[f64] {
        &self.obs_values
    }

    /// Posterior mean over the domain.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Posterior covariance over the domain.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Posterior variance at one point (raw diagonal entry; may carry tiny
    /// negative rounding noise after many updates).
    pub fn variance(&self, i: usize) -> f64 {
        self.cov[(i, i)]
    }

    /// Posterior standard deviation at one point, clamped at zero.
    pub fn std(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0).sqrt()
    }

    /// Diagonal of the posterior covariance.
    pub fn variances(&self) -> DVector<f64> {
        self.cov.diagonal()
    }

    /// Dual weights alpha = (K_t + noise I)^{-1} y, recovered from the stored
    /// factor by one triangular solve. The posterior mean at any point is the
    /// cross-covariance vector dotted with these weights.
    pub fn dual_weights(&self) -> DVector<f64> {
        let t = self.white_y.len();
        let mut alpha = DVector::zeros(t);
        for i in (0..t).rev() {
            let mut s = self.white_y[i];
            for j in (i + 1)..t {
                s -= self.chol_rows[j][i] * alpha[j];
            }
            alpha[i] = s / self.chol_rows[i][i];
        }
        alpha
    }

    /// Lower Cholesky factor of K_t + noise I as a dense matrix.
    pub fn chol_lower(&self) -> DMatrix<f64> {
        let t = self.chol_rows.len();
        let mut l = DMatrix::zeros(t, t);
        for (i, row) in self.chol_rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                l[(i, j)] = v;
            }
        }
        l
    }

    /// Draw one joint sample of the posterior over the whole domain. Uses a
    /// symmetrized covariance and the jitter ladder, since the posterior
    /// covariance can be numerically semidefinite.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let n = self.domain.len();
        let mut sym = self.cov.clone();
        symmetrize(&mut sym);
        let (l, _) = jittered_cholesky(&sym)?;
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(&self.mean + l * z)
    }
}

/// Draw a function from the prior over the domain (the test functions of the
/// regret experiments).
pub fn sample_prior_f<R: Rng + ?Sized>(
    domain: &Domain,
    kernel: &Kernel,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let gram = kernel.gram(domain.points())?;
    let (l, _) = jittered_cholesky(&gram)?;
    let z = DVector::from_fn(domain.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(l * z)
}

fn check_noise(noise_var: f64) -> Result<()> {
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidParam(format!(
            "noise variance must be positive and finite (got {noise_var})"
        )));
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factorization with a diagonal jitter ladder: try the matrix as
/// given, then add jitter starting at 1e-10 of the mean diagonal magnitude
/// and escalate tenfold up to 1e-4 of it. Returns the lower factor and the
/// jitter that succeeded.
pub(crate) fn jittered_cholesky(mat: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = mat.nrows();
    if n == 0 || n != mat.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a nonempty square matrix (got {}x{})",
            n,
            mat.ncols()
        )));
    }
    if let Some(ch) = Cholesky::new(mat.clone()) {
        return Ok((ch.l(), 0.0));
    }
    let scale = (mat.diagonal().iter().map(|v| v.abs()).sum::<f64>() / n as f64)
        .max(f64::MIN_POSITIVE);
    let mut jitter = 1e-10 * scale;
    let cap = 1e-4 * scale * (1.0 + 1e-12);
    while jitter <= cap {
        let mut m = mat.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok((ch.l(), jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::CholeskyFailure { max_jitter: 1e-4 * scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;

    fn two_arm_setup() -> (Arc<Domain>, Arc<Kernel>) {
        let domain = Arc::new(Domain::indexed(2).unwrap());
        let kernel = Arc::new(
            Kernel::fixed_gram(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap(),
        );
        (domain, kernel)
    }

    #[test]
    fn prior_recovers_kernel() {
        let domain = Arc::new(Domain::grid(1, 1.0, 5).unwrap());
        let kernel = Arc::new(Kernel::se(0.4).unwrap());
        let p = Posterior::prior(domain.clone(), kernel.clone(), 0.1).unwrap();
        assert_eq!(p.mean().iter().copied().collect::<Vec<_>>(), vec![0.0; 5]);
        let g = kernel.gram(domain.points()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(p.covariance()[(i, j)], g[(i, j)]);
            }
        }
    }

    #[test]
    fn single_observation_closed_form() {
        // One observation with unit prior variance and unit noise: the
        // posterior mean is y/2 and the variance 1/2.
        let domain = Arc::new(Domain::indexed(1).unwrap());
        let kernel = Arc::new(Kernel::fixed_gram(DMatrix::identity(1, 1)).unwrap());
        let p = Posterior::prior(domain, kernel, 1.0)
            .unwrap()
            .update(0, 3.0)
            .unwrap();
        assert_abs_diff_eq!(p.mean()[0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.variance(0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_arm_frozen_posterior() {
        let (domain, kernel) = two_arm_setup();
        let data = Dataset::new(vec![0, 0, 0], vec![2.0, 1.0, 1.5]);
        let p = Posterior::posterior(domain, kernel, 1.0, &data).unwrap();
        assert_abs_diff_eq!(p.mean()[0], 1.125, epsilon = 1e-12);
        assert_abs_diff_eq!(p.mean()[1], 0.5625, epsilon = 1e-12);
        assert_abs_diff_eq!(p.covariance()[(0, 0)], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.covariance()[(0, 1)], 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(p.covariance()[(1, 1)], 0.8125, epsilon = 1e-12);
    }

    #[test]
    fn incremental_matches_batch() {
        let domain = Arc::new(Domain::grid(1, 1.0, 8).unwrap());
        let kernel = Arc::new(Kernel::se(0.3).unwrap());
        let indices = vec![0, 3, 3, 7, 5];
        let values = vec![0.4, -0.2, 0.1, 1.3, -0.7];

        let mut inc = Posterior::prior(domain.clone(), kernel.clone(), 0.1).unwrap();
        for (&i, &y) in indices.iter().zip(&values) {
            inc = inc.update(i, y).unwrap();
        }
        let batch =
            Posterior::posterior(domain, kernel, 0.1, &Dataset::new(indices, values)).unwrap();

        for j in 0..8 {
            assert_abs_diff_eq!(inc.mean()[j], batch.mean()[j], epsilon = 1e-9);
            for k in 0..8 {
                assert_abs_diff_eq!(
                    inc.covariance()[(j, k)],
                    batch.covariance()[(j, k)],
                    epsilon = 1e-9
                );
            }
        }
        // The extended factor matches the batch factor row by row.
        let li = inc.chol_lower();
        let lb = batch.chol_lower();
        for i in 0..5 {
            for j in 0..=i {
                assert_abs_diff_eq!(li[(i, j)], lb[(i, j)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn update_from_prior_matches_singleton_batch() {
        let (domain, kernel) = two_arm_setup();
        let inc = Posterior::prior(domain.clone(), kernel.clone(), 0.5)
            .unwrap()
            .update(1, 0.7)
            .unwrap();
        let batch =
            Posterior::posterior(domain, kernel, 0.5, &Dataset::new(vec![1], vec![0.7])).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(inc.mean()[j], batch.mean()[j], epsilon = 1e-12);
            for k in 0..2 {
                assert_abs_diff_eq!(
                    inc.covariance()[(j, k)],
                    batch.covariance()[(j, k)],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn variances_never_increase() {
        let domain = Arc::new(Domain::grid(1, 1.0, 6).unwrap());
        let kernel = Arc::new(Kernel::matern(0.4, crate::kernel::MaternNu::FiveHalves).unwrap());
        let mut rng = stream_rng(11, 0);
        let mut p = Posterior::prior(domain, kernel, 0.05).unwrap();
        for step in 0..40 {
            let i = (step * 5 + 2) % 6;
            let before = p.variances();
            let y = rng.sample::<f64, _>(StandardNormal);
            p = p.update(i, y).unwrap();
            for j in 0..6 {
                assert!(p.variance(j) <= before[j] + 1e-12);
            }
            assert!(p.variance(i) < before[i]);
        }
    }

    #[test]
    fn dual_weights_solve_the_noisy_gram_system() {
        let domain = Arc::new(Domain::grid(1, 2.0, 7).unwrap());
        let kernel = Arc::new(Kernel::se(0.6).unwrap());
        let indices = vec![0, 2, 2, 6];
        let values = vec![1.0, -0.5, -0.4, 0.8];
        let p = Posterior::posterior(
            domain.clone(),
            kernel.clone(),
            0.3,
            &Dataset::new(indices.clone(), values.clone()),
        )
        .unwrap();
        let alpha = p.dual_weights();

        let obs_points: Vec<Vec<f64>> = indices.iter().map(|&i| domain.point(i).to_vec()).collect();
        let mut k_noisy = kernel.gram(&obs_points).unwrap();
        for i in 0..4 {
            k_noisy[(i, i)] += 0.3;
        }
        let y = DVector::from_column_slice(&values);
        let resid = k_noisy * &alpha - y;
        assert!(resid.amax() < 1e-10);

        // Mean at each domain point is the cross-covariance dotted with the
        // dual weights.
        for j in 0..7 {
            let mut m = 0.0;
            for (i, op) in obs_points.iter().enumerate() {
                m += alpha[i] * kernel.eval(op, domain.point(j)).unwrap();
            }
            assert_abs_diff_eq!(m, p.mean()[j], epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_one_inverse_identity_holds_to_high_precision() {
        // The all-ones observation Gram plus unit noise has the closed-form
        // inverse I - J/(t+1); the generic factorization must reproduce it.
        for t in [1usize, 10, 50, 100] {
            let mut a = DMatrix::from_element(t, t, 1.0);
            for i in 0..t {
                a[(i, i)] += 1.0;
            }
            let (l, jit) = jittered_cholesky(&a).unwrap();
            assert_eq!(jit, 0.0);
            let lt = l.transpose();
            for k in 0..t.min(7) {
                let mut e = DVector::zeros(t);
                e[k] = 1.0;
                let z = l.solve_lower_triangular(&e).unwrap();
                let x = lt.solve_upper_triangular(&z).unwrap();
                for i in 0..t {
                    let expect = if i == k { 1.0 - 1.0 / (t as f64 + 1.0) } else { -1.0 / (t as f64 + 1.0) };
                    assert_abs_diff_eq!(x[i], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn near_noiseless_conditioning_is_stable() {
        let domain = Arc::new(Domain::grid(1, 1.0, 4).unwrap());
        let kernel = Arc::new(Kernel::se(0.5).unwrap());
        let p = Posterior::prior(domain, kernel, 1e-6)
            .unwrap()
            .update(2, 1.0)
            .unwrap();
        assert_abs_diff_eq!(p.mean()[2], 1.0, epsilon = 1e-5);
        assert!(p.variance(2) < 2e-6);
        assert!(p.variance(2) > 0.0);
    }

    #[test]
    fn sample_path_prior_correlation() {
        let (domain, kernel) = two_arm_setup();
        let p = Posterior::prior(domain, kernel, 1.0).unwrap();
        let mut rng = stream_rng(42, 0);
        let n = 100_000;
        let (mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let f = p.sample_path(&mut rng).unwrap();
            s11 += f[0] * f[0];
            s22 += f[1] * f[1];
            s12 += f[0] * f[1];
        }
        let corr = s12 / (s11.sqrt() * s22.sqrt());
        assert_abs_diff_eq!(corr, 0.5, epsilon = 0.01);
        assert_abs_diff_eq!(s11 / n as f64, 1.0, epsilon = 0.02);
    }

    #[test]
    fn sample_path_is_reproducible() {
        let domain = Arc::new(Domain::grid(1, 1.0, 5).unwrap());
        let kernel = Arc::new(Kernel::se(0.4).unwrap());
        let p = Posterior::prior(domain, kernel, 0.1).unwrap();
        let a = p.sample_path(&mut stream_rng(3, 9)).unwrap();
        let b = p.sample_path(&mut stream_rng(3, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn prior_function_draws_match_the_gram() {
        let domain = Domain::grid(1, 1.0, 8).unwrap();
        let kernel = Kernel::se(0.5).unwrap();
        let gram = kernel.gram(domain.points()).unwrap();
        let mut rng = stream_rng(5, 0);
        let n = 40_000;
        let mut emp = DMatrix::zeros(8, 8);
        for _ in 0..n {
            let f = sample_prior_f(&domain, &kernel, &mut rng).unwrap();
            emp.ger(1.0 / n as f64, &f, &f, 1.0);
        }
        for i in 0..8 {
            for j in 0..8 {
                assert_abs_diff_eq!(emp[(i, j)], gram[(i, j)], epsilon = 0.03);
            }
        }
    }

    #[test]
    fn update_input_validation() {
        let (domain, kernel) = two_arm_setup();
        let p = Posterior::prior(domain.clone(), kernel.clone(), 1.0).unwrap();
        assert!(p.clone().update(2, 0.0).is_err());
        assert!(p.update(0, f64::NAN).is_err());
        assert!(Posterior::prior(domain.clone(), kernel.clone(), 0.0).is_err());
        let bad = Dataset::new(vec![5], vec![0.0]);
        assert!(Posterior::posterior(domain, kernel, 1.0, &bad).is_err());
    }
}
