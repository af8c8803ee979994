//! Tidy CSV and JSON emission. All numeric fields carry 17 significant
//! digits so that re-parsing recovers the exact double and identical runs
//! produce byte-identical files.

use std::io::Write;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::info_gain::MigCurve;
use crate::lower_bound::LockinEstimate;
use crate::regret::RegretTrace;

/// Render a double with 17 significant digits (round-trip exact). Negative
/// zero prints as zero; empty float sums yield -0.0 and a sign there would
/// only confuse readers of the summary columns.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        format!("{:.16e}", 0.0)
    } else {
        format!("{x:.16e}")
    }
}

/// One summary line per horizon. The bound columns appear only when the
/// corresponding toggle was set, uniformly across rows.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub horizon: u64,
    pub mean_rt: f64,
    pub se_rt: f64,
    pub mean_rt2: f64,
    pub se_rt2: f64,
    pub mean_lrt: f64,
    pub mean_count: f64,
    pub bound_rt2: Option<f64>,
    pub tmax: Option<f64>,
}

pub fn write_summary_csv(w: &mut impl Write, rows: &[SummaryRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParam("summary has no rows".into()));
    }
    let with_bound = rows[0].bound_rt2.is_some();
    let with_tmax = rows[0].tmax.is_some();
    if rows
        .iter()
        .any(|r| r.bound_rt2.is_some() != with_bound || r.tmax.is_some() != with_tmax)
    {
        return Err(Error::InvalidParam(
            "summary rows disagree on optional bound columns".into(),
        ));
    }
    let mut header = String::from("T,mean_RT,se_RT,mean_RT2,se_RT2,mean_LRT,mean_count");
    if with_bound {
        header.push_str(",bound_RT2");
    }
    if with_tmax {
        header.push_str(",tmax");
    }
    writeln!(w, "{header}")?;
    for r in rows {
        write!(
            w,
            "{},{},{},{},{},{},{}",
            r.horizon,
            fmt_f64(r.mean_rt),
            fmt_f64(r.se_rt),
            fmt_f64(r.mean_rt2),
            fmt_f64(r.se_rt2),
            fmt_f64(r.mean_lrt),
            fmt_f64(r.mean_count),
        )?;
        if let Some(b) = r.bound_rt2 {
            write!(w, ",{}", fmt_f64(b))?;
        }
        if let Some(t) = r.tmax {
            write!(w, ",{}", fmt_f64(t))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Per-step trace rows `rep,t,arm,inst_regret,sigma,lenient` with t starting
/// at one and the lenient flag as 0/1.
pub fn write_traces_csv(w: &mut impl Write, traces: &[RegretTrace]) -> Result<()> {
    writeln!(w, "rep,t,arm,inst_regret,sigma,lenient")?;
    for (rep, trace) in traces.iter().enumerate() {
        for (i, step) in trace.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                rep,
                i + 1,
                step.arm,
                fmt_f64(step.inst_regret),
                fmt_f64(step.sigma),
                u8::from(step.lenient),
            )?;
        }
    }
    Ok(())
}

/// Tail-probability estimates, one row per horizon: `T,p_hat,se,n_mc`.
pub fn write_lowerbound_csv(w: &mut impl Write, rows: &[LockinEstimate]) -> Result<()> {
    writeln!(w, "T,p_hat,se,n_mc")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.horizon,
            fmt_f64(r.p_hat),
            fmt_f64(r.se),
            r.n_mc,
        )?;
    }
    Ok(())
}

/// Information-gain curve as `t,gamma,method`.
pub fn write_mig_csv(w: &mut impl Write, curve: &MigCurve) -> Result<()> {
    writeln!(w, "t,gamma,method")?;
    for (t, g) in curve.values().iter().enumerate() {
        writeln!(w, "{},{},{}", t, fmt_f64(*g), curve.method())?;
    }
    Ok(())
}

/// Run metadata embedding everything needed to reproduce the outputs.
pub fn run_metadata_json(config: &ExperimentConfig) -> Result<String> {
    let value = serde_json::json!({
        "config": config,
        "seed": config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "mig_method": config.bounds.mig,
    });
    serde_json::to_string_pretty(&value)
        .map_err(|e| Error::Config(format!("metadata serialization failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info_gain::MigMethod;
    use crate::regret::StepRecord;

    #[test]
    fn fmt_f64_round_trips_and_is_stable() {
        for &x in &[1.0 / 3.0, 0.1, -2.5e-300, 58270.539417992365, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt_f64(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn summary_csv_golden() {
        let base = SummaryRow {
            horizon: 8,
            mean_rt: 1.5,
            se_rt: 0.25,
            mean_rt2: 3.0,
            se_rt2: 0.5,
            mean_lrt: 1.0,
            mean_count: 2.0,
            bound_rt2: None,
            tmax: None,
        };
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[base.clone()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "T,mean_RT,se_RT,mean_RT2,se_RT2,mean_LRT,mean_count\n\
             8,1.5000000000000000e0,2.5000000000000000e-1,3.0000000000000000e0,\
             5.0000000000000000e-1,1.0000000000000000e0,2.0000000000000000e0\n"
        );

        let mut with_bounds = base.clone();
        with_bounds.bound_rt2 = Some(100.0);
        with_bounds.tmax = Some(12.5);
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[with_bounds.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "T,mean_RT,se_RT,mean_RT2,se_RT2,mean_LRT,mean_count,bound_RT2,tmax\n"
        ));
        assert!(text.contains(",1.0000000000000000e2,1.2500000000000000e1\n"));

        // Rows must agree on the optional columns.
        assert!(write_summary_csv(&mut Vec::new(), &[base, with_bounds]).is_err());
        assert!(write_summary_csv(&mut Vec::new(), &[]).is_err());
    }

    #[test]
    fn traces_csv_golden() {
        let trace = RegretTrace {
            steps: vec![
                StepRecord { arm: 3, inst_regret: 0.5, sigma: 1.0, lenient: true },
                StepRecord { arm: 0, inst_regret: 0.0, sigma: 0.5, lenient: false },
            ],
        };
        let mut buf = Vec::new();
        write_traces_csv(&mut buf, &[trace]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rep,t,arm,inst_regret,sigma,lenient\n\
             0,1,3,5.0000000000000000e-1,1.0000000000000000e0,1\n\
             0,2,0,0.0000000000000000e0,5.0000000000000000e-1,0\n"
        );
    }

    #[test]
    fn lowerbound_and_mig_csv_golden() {
        let rows = vec![LockinEstimate {
            horizon: 8,
            n_mc: 1000,
            successes: 133,
            p_hat: 0.133,
            se: 0.010736386252245066,
        }];
        let mut buf = Vec::new();
        write_lowerbound_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("T,p_hat,se,n_mc\n"));
        assert!(text.contains("8,1.3300000000000001e-1,"));
        assert!(text.trim_end().ends_with(",1000"));

        let curve = MigCurve::new(vec![0.0, 0.5], MigMethod::Exact).unwrap();
        let mut buf = Vec::new();
        write_mig_csv(&mut buf, &curve).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,gamma,method\n0,0.0000000000000000e0,exact\n1,5.0000000000000000e-1,exact\n"
        );
    }

    #[test]
    fn metadata_embeds_config_and_seed() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            seed = 11
            noise_variance = 1.0
            horizon = 4
            n_reps = 2
            [kernel]
            family = "linear"
            [domain]
            points = [[0.5], [1.0]]
            [policy]
            policy = "ts"
            "#,
        )
        .unwrap();
        let meta = run_metadata_json(&cfg).unwrap();
        let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
        assert_eq!(v["seed"], 11);
        assert_eq!(v["config"]["kernel"]["family"], "linear");
        assert_eq!(v["mig_method"], "greedy");
        assert!(v["version"].as_str().unwrap().contains('.'));
    }
}
