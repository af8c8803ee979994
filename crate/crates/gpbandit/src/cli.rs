//! Command-line entry points: `run` (configured experiments), `lowerbound`
//! (two-armed tail estimates), `mig` (information-gain curves), and
//! `verify` (the built-in check suite). All commands are driven entirely by
//! explicit configuration and seeds; nothing reads the wall clock.

use clap::{Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::PathBuf;

use crate::bounds::{lenient_count_beta, second_moment_bound, tmax_fixed_point};
use crate::config::ExperimentConfig;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::info_gain::{mig_exact, mig_greedy, MigCurve, MigMethod};
use crate::kernel::Kernel;
use crate::lower_bound::{decay_fit, simulate_lockin, LockinEstimate};
use crate::output::{
    fmt_f64, run_metadata_json, write_lowerbound_csv, write_mig_csv, write_summary_csv,
    write_traces_csv, SummaryRow,
};
use crate::regret::{run_replications, run_replications_with_traces, RegretTrace};
use crate::verify::{run_all, VerifyLevel};

#[derive(Parser, Debug)]
#[command(
    name = "gpbandit",
    version,
    about = "Gaussian-process bandit laboratory: policies, regret bounds, and their checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate Pr(R_T >= T/2) on the two-armed instance over a horizon grid.
    Lowerbound {
        /// Comma-separated horizons, e.g. 8,16,32,64.
        #[arg(long = "T-grid", value_delimiter = ',', required = true)]
        t_grid: Vec<u64>,
        /// Monte Carlo replications per horizon.
        #[arg(long = "n-mc")]
        n_mc: u64,
        /// Master seed.
        #[arg(long)]
        seed: u64,
        /// Output directory (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit an information-gain curve for a config's kernel and domain.
    Mig {
        /// Path to the experiment config (kernel, domain, and noise are used).
        #[arg(long)]
        config: PathBuf,
        /// Curve method (default: the config's bounds.mig choice).
        #[arg(long, value_enum)]
        method: Option<MigMethodArg>,
        /// Curve horizon.
        #[arg(long)]
        horizon: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
        /// Write machine-readable verdicts to this JSON file
        /// (default for --level full: verify_full.json).
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MigMethodArg {
    Exact,
    Greedy,
}

impl From<MigMethodArg> for MigMethod {
    fn from(m: MigMethodArg) -> Self {
        match m {
            MigMethodArg::Exact => MigMethod::Exact,
            MigMethodArg::Greedy => MigMethod::Greedy,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LevelArg {
    Fast,
    Full,
}

impl From<LevelArg> for VerifyLevel {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Fast => VerifyLevel::Fast,
            LevelArg::Full => VerifyLevel::Full,
        }
    }
}

/// Execute a parsed command. `Error::Config` maps to exit code 2 at the
/// binary boundary; all other errors map to 1.
pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Lowerbound { t_grid, n_mc, seed, out } => {
            cmd_lowerbound(&t_grid, n_mc, seed, out.as_deref())
        }
        Command::Mig { config, method, horizon, out } => {
            cmd_mig(&config, method.map(Into::into), horizon, out.as_deref())
        }
        Command::Verify { level, json } => cmd_verify(level.into(), json),
    }
}

fn build_curve(
    method: MigMethod,
    kernel: &Kernel,
    noise_var: f64,
    domain: &Domain,
    horizon: usize,
) -> Result<MigCurve> {
    match method {
        MigMethod::Exact => mig_exact(kernel, noise_var, domain, horizon),
        MigMethod::Greedy => mig_greedy(kernel, noise_var, domain, horizon),
    }
}

/// Run every horizon of a config and assemble summary rows (and traces when
/// requested). This is the whole of `run` minus the file system, so the
/// determinism check can compare its output across thread pools.
pub fn summarize(
    cfg: &ExperimentConfig,
) -> Result<(Vec<SummaryRow>, Vec<(u64, Vec<RegretTrace>)>)> {
    let (domain, kernel) = cfg.build()?;
    let mut rows = Vec::new();
    let mut all_traces = Vec::new();
    for horizon in cfg.horizon_grid() {
        let episode = cfg.episode(&domain, &kernel, horizon);
        let summary = if cfg.write_traces {
            let (summary, traces) =
                run_replications_with_traces(&episode, cfg.n_reps, cfg.seed)?;
            all_traces.push((horizon, traces));
            summary
        } else {
            run_replications(&episode, cfg.n_reps, cfg.seed)?
        };

        let needs_curve = cfg.bounds.bound_rt2 || cfg.bounds.tmax;
        let curve = if needs_curve {
            Some(build_curve(
                cfg.bounds.mig,
                &kernel,
                cfg.noise_variance,
                &domain,
                horizon as usize,
            )?)
        } else {
            None
        };
        let bound_rt2 = if cfg.bounds.bound_rt2 {
            let curve = curve.as_ref().expect("curve built above");
            Some(second_moment_bound(
                horizon,
                domain.len(),
                curve.last(),
                cfg.noise_variance,
            )?)
        } else {
            None
        };
        let tmax = if cfg.bounds.tmax {
            let curve = curve.as_ref().expect("curve built above");
            let beta = lenient_count_beta(horizon, domain.len())?;
            let delta = cfg.delta.expect("validated: tmax requires delta");
            Some(
                tmax_fixed_point(curve, beta, delta, horizon, cfg.noise_variance, None)?
                    .value,
            )
        } else {
            None
        };

        rows.push(SummaryRow {
            horizon,
            mean_rt: summary.mean_rt,
            se_rt: summary.se_rt,
            mean_rt2: summary.mean_rt2,
            se_rt2: summary.se_rt2,
            mean_lrt: summary.mean_lenient_regret,
            mean_count: summary.mean_lenient_count,
            bound_rt2,
            tmax,
        });
    }
    Ok((rows, all_traces))
}

fn cmd_run(config_path: &std::path::Path, out_override: Option<&std::path::Path>) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let out_dir: PathBuf = out_override
        .map(PathBuf::from)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;

    let (rows, traces) = summarize(&cfg)?;

    let summary_path = out_dir.join("summary.csv");
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &rows)?;
    fs::write(&summary_path, buf)?;
    println!("wrote {}", summary_path.display());

    for (horizon, horizon_traces) in &traces {
        let path = out_dir.join(format!("traces_{horizon}.csv"));
        let mut buf = Vec::new();
        write_traces_csv(&mut buf, horizon_traces)?;
        fs::write(&path, buf)?;
        println!("wrote {}", path.display());
    }

    let meta_path = out_dir.join("metadata.json");
    fs::write(&meta_path, run_metadata_json(&cfg)?)?;
    println!("wrote {}", meta_path.display());

    for row in &rows {
        println!(
            "T={}: mean R_T = {:.4} (se {:.4})",
            row.horizon, row.mean_rt, row.se_rt
        );
    }
    Ok(())
}

fn cmd_lowerbound(
    t_grid: &[u64],
    n_mc: u64,
    seed: u64,
    out: Option<&std::path::Path>,
) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Config("--T-grid needs at least one horizon".into()));
    }
    let out_dir: PathBuf = out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;

    let mut estimates: Vec<LockinEstimate> = Vec::new();
    for &horizon in t_grid {
        let est = simulate_lockin(horizon, n_mc, seed)?;
        println!(
            "T={}: p_hat = {} (se {}, {}/{} successes)",
            est.horizon,
            fmt_f64(est.p_hat),
            fmt_f64(est.se),
            est.successes,
            est.n_mc
        );
        estimates.push(est);
    }

    let csv_path = out_dir.join("lowerbound.csv");
    let mut buf = Vec::new();
    write_lowerbound_csv(&mut buf, &estimates)?;
    fs::write(&csv_path, buf)?;
    println!("wrote {}", csv_path.display());

    let fit_path = out_dir.join("fit.json");
    let fit_json = if estimates.len() >= 4 {
        let pairs: Vec<(u64, f64)> = estimates.iter().map(|e| (e.horizon, e.p_hat)).collect();
        let fit = decay_fit(&pairs)?;
        println!(
            "decay fit: preferred = {:?}, polynomial exponent = {:.4}",
            fit.preferred,
            fit.poly_decay_exponent()
        );
        serde_json::to_string_pretty(&fit)
            .map_err(|e| Error::Config(format!("fit serialization failed: {e}")))?
    } else {
        serde_json::to_string_pretty(&serde_json::json!({
            "note": "decay fit skipped: needs at least 4 horizons",
            "horizons": t_grid,
        }))
        .map_err(|e| Error::Config(format!("fit serialization failed: {e}")))?
    };
    fs::write(&fit_path, fit_json)?;
    println!("wrote {}", fit_path.display());
    Ok(())
}

fn cmd_mig(
    config_path: &std::path::Path,
    method: Option<MigMethod>,
    horizon: u64,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let (domain, kernel) = cfg.build()?;
    let method = method.unwrap_or(cfg.bounds.mig);
    let curve = build_curve(method, &kernel, cfg.noise_variance, &domain, horizon as usize)?;
    let mut buf = Vec::new();
    write_mig_csv(&mut buf, &curve)?;
    match out {
        Some(path) => {
            fs::write(path, buf)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(())
}

fn cmd_verify(level: VerifyLevel, json: Option<PathBuf>) -> Result<()> {
    let outcomes = run_all(level);
    let mut failed = 0usize;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {}", o.name, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());

    let json_path = json.or_else(|| match level {
        VerifyLevel::Full => Some(PathBuf::from("verify_full.json")),
        VerifyLevel::Fast => None,
    });
    if let Some(path) = json_path {
        let text = serde_json::to_string_pretty(&outcomes)
            .map_err(|e| Error::Config(format!("verdict serialization failed: {e}")))?;
        fs::write(&path, text)?;
        println!("wrote {}", path.display());
    }

    if failed > 0 {
        return Err(Error::Verification(format!(
            "{failed} of {} checks failed",
            outcomes.len()
        )));
    }
    Ok(())
}
