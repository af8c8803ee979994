//! Experiment configuration: a single TOML file describing the kernel,
//! domain, policy, horizons, replication budget, and bound toggles. Every
//! run is reproducible from the file plus its mandatory seed.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::info_gain::MigMethod;
use crate::kernel::{Kernel, MaternNu};
use crate::policy::PolicyKind;
use crate::regret::EpisodeConfig;

/// Kernel section, tagged by family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Linear,
    Se {
        lengthscale: f64,
    },
    Matern {
        lengthscale: f64,
        nu: f64,
    },
    /// Explicit Gram matrix over an indexed domain, for hand-built
    /// instances such as the two-armed problem.
    Fixed {
        matrix: Vec<Vec<f64>>,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel> {
        match self {
            KernelSpec::Linear => Ok(Kernel::Linear),
            KernelSpec::Se { lengthscale } => Kernel::se(*lengthscale),
            KernelSpec::Matern { lengthscale, nu } => {
                Kernel::matern(*lengthscale, MaternNu::from_value(*nu)?)
            }
            KernelSpec::Fixed { matrix } => {
                let n = matrix.len();
                if n == 0 {
                    return Err(Error::Config("fixed kernel matrix is empty".into()));
                }
                if matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::Config(format!(
                        "fixed kernel matrix must be square ({n} rows)"
                    )));
                }
                let m =
                    nalgebra::DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
                Kernel::fixed_gram(m)
            }
        }
    }
}

/// Regular-lattice domain over [0, r]^d with tau cells per dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub r: f64,
    pub tau: usize,
}

/// Domain section: either an explicit point list or a grid description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        match (&self.points, &self.grid) {
            (Some(points), None) => Domain::from_points(points.clone()),
            (None, Some(g)) => Domain::grid(g.d, g.r, g.tau),
            _ => Err(Error::Config(
                "domain needs exactly one of `points` or `grid`".into(),
            )),
        }
    }
}

/// Policy section: `policy = "ts"` or `policy = "ucb"` with a confidence
/// level (default 0.1).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicySpec {
    Ts,
    Ucb {
        #[serde(default = "default_ucb_delta")]
        delta: f64,
    },
}

fn default_ucb_delta() -> f64 {
    0.1
}

impl PolicySpec {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicySpec::Ts => PolicyKind::ThompsonSampling,
            PolicySpec::Ucb { delta } => PolicyKind::Ucb { delta: *delta },
        }
    }
}

/// Optional bound-evaluator toggles for the summary output.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundToggles {
    /// Add a second-moment regret bound column.
    pub bound_rt2: bool,
    /// Add a saturation-time column (requires a lenient tolerance).
    pub tmax: bool,
    /// Which information-gain curve feeds the bound columns.
    pub mig: MigMethod,
}

impl Default for BoundToggles {
    fn default() -> Self {
        BoundToggles {
            bound_rt2: false,
            tmax: false,
            mig: MigMethod::Greedy,
        }
    }
}

/// A full experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; mandatory so no run ever depends on the wall clock.
    pub seed: u64,
    pub noise_variance: f64,
    /// Single horizon; exclusive with `horizons`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Horizon grid; exclusive with `horizon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<u64>>,
    pub n_reps: u64,
    /// Lenient tolerance; enables lenient regret and count columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub write_traces: bool,
    /// Default output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub kernel: KernelSpec,
    pub domain: DomainSpec,
    pub policy: PolicySpec,
    #[serde(default)]
    pub bounds: BoundToggles,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// The horizon grid in declared order (a single horizon becomes a
    /// one-element grid).
    pub fn horizon_grid(&self) -> Vec<u64> {
        match (&self.horizon, &self.horizons) {
            (Some(t), None) => vec![*t],
            (None, Some(ts)) => ts.clone(),
            _ => unreachable!("validated at parse time"),
        }
    }

    fn validate(&self) -> Result<()> {
        match (&self.horizon, &self.horizons) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either `horizon` or `horizons`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "one of `horizon` or `horizons` is required".into(),
                ))
            }
            (None, Some(ts)) if ts.is_empty() => {
                return Err(Error::Config("`horizons` must be nonempty".into()))
            }
            _ => {}
        }
        for &t in &self.horizon_grid() {
            if t == 0 {
                return Err(Error::Config("horizons must be >= 1".into()));
            }
        }
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be >= 1".into()));
        }
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::Config(format!(
                "noise_variance must be positive and finite (got {})",
                self.noise_variance
            )));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Config(format!(
                    "delta must be positive and finite (got {d})"
                )));
            }
        }
        if let PolicySpec::Ucb { delta } = self.policy {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Config(format!(
                    "ucb delta must lie in (0, 1) (got {delta})"
                )));
            }
        }
        if self.bounds.tmax && self.delta.is_none() {
            return Err(Error::Config(
                "the tmax bound needs a lenient tolerance: set `delta`".into(),
            ));
        }
        Ok(())
    }

    /// Construct the shared domain and kernel and check they are mutually
    /// consistent (a fixed Gram kernel needs an indexed domain).
    pub fn build(&self) -> Result<(Arc<Domain>, Arc<Kernel>)> {
        let domain = Arc::new(self.domain.build()?);
        let kernel = Arc::new(self.kernel.build()?);
        // Any kernel/domain mismatch (dimension, non-index points for a
        // fixed Gram) surfaces here rather than mid-run.
        kernel.gram(domain.points())?;
        Ok((domain, kernel))
    }

    /// Episode parameters for one horizon of the grid.
    pub fn episode(
        &self,
        domain: &Arc<Domain>,
        kernel: &Arc<Kernel>,
        horizon: u64,
    ) -> EpisodeConfig {
        EpisodeConfig {
            domain: domain.clone(),
            kernel: kernel.clone(),
            noise_var: self.noise_variance,
            horizon,
            policy: self.policy.kind(),
            delta: self.delta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 7
        noise_variance = 1.0
        horizon = 20
        n_reps = 10

        [kernel]
        family = "fixed"
        matrix = [[1.0, 0.5], [0.5, 1.0]]

        [domain]
        points = [[0.0], [1.0]]

        [policy]
        policy = "ts"
    "#;

    #[test]
    fn minimal_config_parses_and_builds() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.horizon_grid(), vec![20]);
        assert!(!cfg.write_traces);
        assert!(!cfg.bounds.bound_rt2);
        assert_eq!(cfg.bounds.mig, MigMethod::Greedy);
        let (domain, kernel) = cfg.build().unwrap();
        assert_eq!(domain.len(), 2);
        assert_eq!(kernel.eval(domain.point(0), domain.point(1)).unwrap(), 0.5);
        let ep = cfg.episode(&domain, &kernel, 20);
        assert_eq!(ep.horizon, 20);
        assert_eq!(ep.policy, PolicyKind::ThompsonSampling);
    }

    #[test]
    fn full_config_with_grid_and_toggles() {
        let text = r#"
            seed = 42
            noise_variance = 0.01
            horizons = [256, 512]
            n_reps = 200
            delta = 0.5
            write_traces = true

            [kernel]
            family = "se"
            lengthscale = 0.2

            [domain]
            grid = { d = 1, r = 1.0, tau = 50 }

            [policy]
            policy = "ucb"
            delta = 0.05

            [bounds]
            bound_rt2 = true
            tmax = true
            mig = "greedy"
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.horizon_grid(), vec![256, 512]);
        assert_eq!(cfg.policy.kind(), PolicyKind::Ucb { delta: 0.05 });
        assert!(cfg.bounds.tmax);
        let (domain, _) = cfg.build().unwrap();
        assert_eq!(domain.len(), 50);
        assert!(domain.grid_meta().is_some());
    }

    #[test]
    fn ucb_delta_defaults_when_omitted() {
        let text = MINIMAL.replace("policy = \"ts\"", "policy = \"ucb\"");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.policy.kind(), PolicyKind::Ucb { delta: 0.1 });
    }

    #[test]
    fn matern_kernel_round_trip() {
        let text = MINIMAL.replace(
            "family = \"fixed\"\n        matrix = [[1.0, 0.5], [0.5, 1.0]]",
            "family = \"matern\"\n        lengthscale = 0.4\n        nu = 2.5",
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let (_, kernel) = cfg.build().unwrap();
        assert!(matches!(&*kernel, Kernel::Matern { .. }));
    }

    #[test]
    fn rejects_malformed_configs() {
        // Missing seed.
        let no_seed = MINIMAL.replace("seed = 7", "");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&no_seed),
            Err(Error::Config(_))
        ));

        // Both horizon and horizons.
        let both = MINIMAL.replace("horizon = 20", "horizon = 20\n        horizons = [4, 8]");
        assert!(ExperimentConfig::from_toml_str(&both).is_err());

        // Neither.
        let neither = MINIMAL.replace("horizon = 20", "");
        assert!(ExperimentConfig::from_toml_str(&neither).is_err());

        // tmax toggle without a tolerance.
        let tmax = format!("{MINIMAL}\n        [bounds]\n        tmax = true\n");
        let err = ExperimentConfig::from_toml_str(&tmax).unwrap_err();
        assert!(err.to_string().contains("delta"));

        // Unknown top-level key is a parse error, not silently ignored.
        let unknown = format!("horizn = 3\n{MINIMAL}");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());

        // Ragged fixed matrix.
        let ragged = MINIMAL.replace("[[1.0, 0.5], [0.5, 1.0]]", "[[1.0, 0.5], [0.5]]");
        assert!(ExperimentConfig::from_toml_str(&ragged)
            .unwrap()
            .build()
            .is_err());

        // Fixed kernel over non-index points.
        let off_grid = MINIMAL.replace("[[0.0], [1.0]]", "[[0.25], [1.0]]");
        assert!(ExperimentConfig::from_toml_str(&off_grid)
            .unwrap()
            .build()
            .is_err());
    }
}
