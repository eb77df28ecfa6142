//! Report emission: JSON envelopes for stdout/`--out`, and plot-ready CSV
//! tables for the figure families.

use std::fmt::Write as _;
use std::path::Path;

use fairpost_core::harness::{AblationTable, FairnessReport, SweepResult};

use crate::error::{self, Result};

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Wraps a payload in the common report envelope. With `reproducible` the
/// timestamp is omitted so identical inputs render byte-identically.
pub fn render_json<T: serde::Serialize>(
    command: &str,
    payload: &T,
    reproducible: bool,
) -> Result<String> {
    let mut obj = serde_json::Map::new();
    obj.insert("command".into(), serde_json::Value::from(command));
    obj.insert("tool_version".into(), serde_json::Value::from(env!("CARGO_PKG_VERSION")));
    if !reproducible {
        obj.insert("generated_at_unix".into(), serde_json::Value::from(unix_now()));
    }
    obj.insert("result".into(), serde_json::to_value(payload)?);
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))?;
    text.push('\n');
    Ok(text)
}

/// Writes to the file when a path is given, otherwise to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => error::write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Long-format table for the accuracy/DPD/AOD bar figures.
pub fn metric_bars_csv(report: &FairnessReport) -> String {
    let mut out = String::from("model,postproc,metric,mean,ci_low,ci_high,sd\n");
    for row in &report.rows {
        let cells = [
            ("accuracy", row.metrics.accuracy),
            ("balanced_accuracy", row.metrics.balanced_accuracy),
            ("dpd_signed", row.metrics.dpd_signed),
            ("dpd_abs", row.metrics.dpd_abs),
            ("aod_signed", row.metrics.aod_signed),
            ("aod_abs", row.metrics.aod_abs),
            ("eod", row.metrics.eod),
        ];
        for (name, s) in cells {
            let _ = writeln!(
                out,
                "{},{},{name},{},{},{},{}",
                row.model.as_str(),
                row.postproc.as_str(),
                s.mean,
                s.ci_low,
                s.ci_high,
                s.sd
            );
        }
    }
    out
}

/// Wide-format table for the threshold-sweep curves.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from(
        "threshold,base_balanced_accuracy,base_dpd,cafp_balanced_accuracy,cafp_dpd,\
         eqodds_balanced_accuracy,eqodds_dpd\n",
    );
    for i in 0..sweep.thresholds.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            sweep.thresholds[i],
            sweep.base_balanced_accuracy[i],
            sweep.base_dpd[i],
            sweep.cafp_balanced_accuracy[i],
            sweep.cafp_dpd[i],
            sweep.eqodds_balanced_accuracy[i],
            sweep.eqodds_dpd[i]
        );
    }
    out
}

/// Three-row table for the score-source ablation.
pub fn ablation_csv(table: &AblationTable) -> String {
    let mut out = String::from("variant,accuracy,dpd_signed,aod_signed\n");
    for row in &table.rows {
        let variant = match row.variant {
            fairpost_core::harness::ScoreVariant::Factual => "factual",
            fairpost_core::harness::ScoreVariant::Counterfactual => "counterfactual",
            fairpost_core::harness::ScoreVariant::Averaged => "averaged",
        };
        let _ = writeln!(
            out,
            "{variant},{},{},{}",
            row.accuracy, row.dpd_signed, row.aod_signed
        );
    }
    out
}

/// Writes named plot files into the directory, creating it if needed.
pub fn write_plot_data(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| crate::error::Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (name, content) in files {
        error::write_file(&dir.join(name), content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fairpost_core::harness::{
        ExperimentConfig, PostProc, SyntheticConfig, make_synthetic, run_experiment,
        threshold_sweep,
    };
    use fairpost_core::model::ModelKind;

    fn small_report() -> FairnessReport {
        let ds = make_synthetic(&SyntheticConfig::new(13, 360)).unwrap();
        let cfg = ExperimentConfig {
            repeats: 2,
            postprocessors: vec![PostProc::None, PostProc::Cafp],
            ..ExperimentConfig::new("synthetic", "none", ModelKind::Lr)
        };
        run_experiment(&ds, &cfg).unwrap()
    }

    #[test]
    fn reproducible_json_is_stable_and_timestamp_free() {
        let report = small_report();
        let a = render_json("audit", &report, true).unwrap();
        let b = render_json("audit", &report, true).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("generated_at_unix"));
        assert!(a.contains("\"command\": \"audit\""));
        let with_time = render_json("audit", &report, false).unwrap();
        assert!(with_time.contains("generated_at_unix"));
    }

    #[test]
    fn metric_bars_have_one_row_per_metric() {
        let report = small_report();
        let csv = metric_bars_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "model,postproc,metric,mean,ci_low,ci_high,sd");
        assert_eq!(lines.len(), 1 + 2 * 7);
        assert!(lines[1].starts_with("lr,none,accuracy,"));
        assert!(lines[8].starts_with("lr,cafp,accuracy,"));
    }

    #[test]
    fn sweep_csv_has_25_rows_and_parses_back() {
        let ds = make_synthetic(&SyntheticConfig::new(14, 400)).unwrap();
        let cfg = ExperimentConfig {
            repeats: 1,
            ..ExperimentConfig::new("synthetic", "none", ModelKind::Lr)
        };
        let sweep = threshold_sweep(&ds, &cfg).unwrap();
        let csv = sweep_csv(&sweep);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 26);
        let first: Vec<f64> =
            lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], 0.01);
        assert_eq!(first.len(), 7);
    }
}
