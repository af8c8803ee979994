//! Finite search domains: explicit point lists, regular lattices over
//! [0, r]^d, and the discretization resolutions that make a lattice fine
//! enough for the confidence analysis to carry over from the continuum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest lattice the grid constructor will materialize.
const MAX_GRID_POINTS: u128 = 2_000_000;

/// Geometry of a regular lattice, kept alongside the expanded points so
/// outputs can echo how a domain was built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub d: usize,
    pub r: f64,
    pub tau: usize,
}

/// A finite set of distinct points in R^d.
#[derive(Clone, Debug)]
pub struct Domain {
    points: Vec<Vec<f64>>,
    grid: Option<GridMeta>,
}

impl Domain {
    /// Build a domain from an explicit list of points. Points must be
    /// nonempty, share a dimension, and be pairwise distinct.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParam("domain must contain at least one point".into()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidParam("domain points must have dimension >= 1".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {i} has dimension {} but point 0 has dimension {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParam(format!("point {i} has a non-finite coordinate")));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidParam(format!(
                        "domain points {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(Domain { points, grid: None })
    }

    /// Regular lattice over [0, r]^d with tau points per dimension, so
    /// tau^d points in total. tau = 1 places a single point at the origin
    /// of each axis.
    pub fn grid(d: usize, r: f64, tau: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParam("grid dimension must be >= 1".into()));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParam(format!("grid extent must be positive (got {r})")));
        }
        if tau == 0 {
            return Err(Error::InvalidParam("grid resolution must be >= 1".into()));
        }
        let total = (tau as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if total > MAX_GRID_POINTS {
            return Err(Error::SizeGuard(format!(
                "grid would contain {total} points (limit {MAX_GRID_POINTS})"
            )));
        }
        let axis: Vec<f64> = if tau == 1 {
            vec![0.0]
        } else {
            (0..tau).map(|i| r * i as f64 / (tau - 1) as f64).collect()
        };
        let mut points = Vec::with_capacity(total as usize);
        let mut idx = vec![0usize; d];
        loop {
            points.push(idx.iter().map(|&i| axis[i]).collect());
            // Odometer increment over the d axes, last axis fastest.
            let mut k = d;
            loop {
                if k == 0 {
                    return Ok(Domain {
                        points,
                        grid: Some(GridMeta { d, r, tau }),
                    });
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < tau {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Domain of n integer index points [0], [1], ..., for use with fixed
    /// Gram kernels.
    pub fn indexed(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("indexed domain must contain at least one point".into()));
        }
        Ok(Domain {
            points: (0..n).map(|i| vec![i as f64]).collect(),
            grid: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn grid_meta(&self) -> Option<GridMeta> {
        self.grid
    }
}

/// Which discretization guarantee the resolution should support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Control the instantaneous discretization error at confidence level
    /// 1/u, with resolution growing like sqrt(log(a d)).
    LinearError,
    /// Control the squared discretization error, with resolution growing
    /// like sqrt(u log(a d)).
    SquaredError,
}

/// Points per dimension needed so that discretization error is negligible at
/// scale 1/u, for a function with Lipschitz tail constants (a, b) on
/// [0, r]^d.
pub fn discretization_grid(d: usize, r: f64, a: f64, b: f64, u: f64, mode: GridMode) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidParam("dimension must be >= 1".into()));
    }
    for (name, v) in [("r", r), ("a", a), ("b", b), ("u", u)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParam(format!(
                "discretization parameter {name} must be positive and finite (got {v})"
            )));
        }
    }
    let log_ad = (a * d as f64).ln();
    let raw = match mode {
        GridMode::LinearError => {
            if log_ad < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "log(a d) = {log_ad:.6} is negative; the linear-error resolution needs a d >= 1"
                )));
            }
            b * d as f64 * r * u * (log_ad.sqrt() + std::f64::consts::PI.sqrt() / 2.0)
        }
        GridMode::SquaredError => {
            if log_ad + 1.0 < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "log(a d) + 1 = {:.6} is negative; the squared-error resolution needs a d >= 1/e",
                    log_ad + 1.0
                )));
            }
            b * d as f64 * r * (u * (log_ad + 1.0)).sqrt()
        }
    };
    if !raw.is_finite() || raw > 1e18 {
        return Err(Error::InvalidParam(format!(
            "discretization resolution overflows ({raw:.3e} points per dimension)"
        )));
    }
    Ok((raw.ceil() as u64).max(1))
}
