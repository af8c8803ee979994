//! Covariance kernels over finite point sets: linear, squared exponential,
//! half-integer Matern, and an explicit Gram matrix over indexed points.
//!
//! All kernels are evaluated through closed forms, so Gram matrices are exact
//! up to floating-point rounding. The half-integer Matern family uses the
//! polynomial-times-exponential expressions; other smoothness values are
//! rejected rather than approximated.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Smoothness values of the Matern family that admit closed-form kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
    SevenHalves,
}

impl MaternNu {
    /// Numeric value of the smoothness parameter.
    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
            MaternNu::SevenHalves => 3.5,
        }
    }

    /// Parse a numeric smoothness value; only half-integers up to 7/2 are
    /// supported.
    pub fn from_value(nu: f64) -> Result<Self> {
        if nu == 0.5 {
            Ok(MaternNu::Half)
        } else if nu == 1.5 {
            Ok(MaternNu::ThreeHalves)
        } else if nu == 2.5 {
            Ok(MaternNu::FiveHalves)
        } else if nu == 3.5 {
            Ok(MaternNu::SevenHalves)
        } else {
            Err(Error::InvalidParam(format!(
                "matern smoothness must be one of 0.5, 1.5, 2.5, 3.5 (got {nu})"
            )))
        }
    }
}

/// A positive-semidefinite covariance function.
///
/// `FixedGram` interprets points as single-coordinate integer indices into its
/// matrix, which lets arbitrary finite covariance structures (for instance the
/// two-armed lower-bound instance) flow through the same machinery as the
/// geometric kernels.
#[derive(Clone, Debug)]
pub enum Kernel {
    Linear,
    SquaredExponential { lengthscale: f64 },
    Matern { lengthscale: f64, nu: MaternNu },
    FixedGram { matrix: DMatrix<f64> },
}

impl Kernel {
    /// Squared-exponential kernel with the given lengthscale.
    pub fn se(lengthscale: f64) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(Kernel::SquaredExponential { lengthscale })
    }

    /// Matern kernel with the given lengthscale and half-integer smoothness.
    pub fn matern(lengthscale: f64, nu: MaternNu) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(Kernel::Matern { lengthscale, nu })
    }

    /// Explicit Gram matrix over indexed points. The matrix must be square,
    /// nonempty, and symmetric.
    pub fn fixed_gram(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidParam(format!(
                "fixed gram matrix must be square and nonempty (got {}x{})",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for i in 0..matrix.nrows() {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParam(format!(
                        "fixed gram matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Kernel::FixedGram { matrix })
    }

    /// Evaluate k(x, y).
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "kernel arguments have lengths {} and {}",
                x.len(),
                y.len()
            )));
        }
        match self {
            Kernel::Linear => Ok(x.iter().zip(y).map(|(a, b)| a * b).sum()),
            Kernel::SquaredExponential { lengthscale } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-r2 / (2.0 * lengthscale * lengthscale)).exp())
            }
            Kernel::Matern { lengthscale, nu } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                let r = r2.sqrt();
                Ok(matern_closed_form(r / lengthscale, *nu))
            }
            Kernel::FixedGram { matrix } => {
                let i = gram_index(x, matrix.nrows())?;
                let j = gram_index(y, matrix.nrows())?;
                Ok(matrix[(i, j)])
            }
        }
    }

    /// Gram matrix over a point set. The result is symmetric by construction
    /// (each off-diagonal pair is filled from a single evaluation).
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let n = points.len();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(&points[i], &points[j])?;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    /// Lipschitz constant of the posterior standard deviation as a function
    /// of the input, valid for stationary kernels with enough smoothness:
    /// 1 for the linear kernel on the unit ball, sqrt(2)/l for the squared
    /// exponential, and the Matern expression for nu > 1. The fixed Gram
    /// kernel has no input geometry, so no constant exists.
    pub fn lipschitz_sigma(&self) -> Result<f64> {
        match self {
            Kernel::Linear => Ok(1.0),
            Kernel::SquaredExponential { lengthscale } => Ok(2.0_f64.sqrt() / lengthscale),
            Kernel::Matern { lengthscale, nu } => matern_sigma_lipschitz(*lengthscale, nu.value()),
            Kernel::FixedGram { .. } => Err(Error::InvalidParam(
                "fixed gram kernels carry no input geometry, so no Lipschitz constant exists"
                    .into(),
            )),
        }
    }
}

/// Lipschitz constant of the posterior standard deviation for a Matern kernel
/// with arbitrary smoothness nu > 1: (sqrt(2)/l) * sqrt(nu / (nu - 1)).
///
/// This is a free function because the constant is well defined for any
/// nu > 1, including values without a closed-form kernel.
pub fn matern_sigma_lipschitz(lengthscale: f64, nu: f64) -> Result<f64> {
    check_lengthscale(lengthscale)?;
    if nu <= 1.0 {
        return Err(Error::InvalidParam(format!(
            "matern sigma Lipschitz constant requires nu > 1 (got {nu})"
        )));
    }
    Ok((2.0_f64.sqrt() / lengthscale) * (nu / (nu - 1.0)).sqrt())
}

fn check_lengthscale(lengthscale: f64) -> Result<()> {
    if !(lengthscale > 0.0) || !lengthscale.is_finite() {
        return Err(Error::InvalidParam(format!(
            "lengthscale must be positive and finite (got {lengthscale})"
        )));
    }
    Ok(())
}

/// Interpret a point as an integer index into a fixed Gram matrix.
fn gram_index(x: &[f64], n: usize) -> Result<usize> {
    if x.len() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "fixed gram kernels take 1-d index points (got dimension {})",
            x.len()
        )));
    }
    let v = x[0];
    if v.fract() != 0.0 || v < 0.0 || v >= n as f64 {
        return Err(Error::OutOfRange(format!(
            "fixed gram index {v} is not an integer in [0, {n})"
        )));
    }
    Ok(v as usize)
}

/// Closed-form Matern correlations at scaled distance r/l.
fn matern_closed_form(scaled_r: f64, nu: MaternNu) -> f64 {
    match nu {
        MaternNu::Half => (-scaled_r).exp(),
        MaternNu::ThreeHalves => {
            let s = 3.0_f64.sqrt() * scaled_r;
            (1.0 + s) * (-s).exp()
        }
        MaternNu::FiveHalves => {
            let s = 5.0_f64.sqrt() * scaled_r;
            (1.0 + s + s * s / 3.0) * (-s).exp()
        }
        MaternNu::SevenHalves => {
            let s = 7.0_f64.sqrt() * scaled_r;
            (1.0 + s + 2.0 * s * s / 5.0 + s * s * s / 15.0) * (-s).exp()
        }
    }
}
