//! Time-series CSV and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{parse_scenario, ParseMode, ScenarioConfig};
use crate::sim::TimeSeriesRecord;

pub const TOOL_NAME: &str = "conflictsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Render `v` with 9 significant digits, `%.9g` style: fixed notation for
/// decimal exponents in `[-5, 9)`, scientific otherwise, trailing zeros
/// trimmed.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_header(n: usize, p: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for prefix in ["x_N", "x_A", "x_H"] {
        cols.extend((0..n).map(|i| format!("{prefix}{i}")));
    }
    for prefix in ["u_A", "u_H"] {
        cols.extend((0..p).map(|i| format!("{prefix}{i}")));
    }
    cols.extend(["d_vod", "d_vid", "d_vad", "P", "S", "R", "grade"].map(String::from));
    cols
}

/// Number of CSV columns for `n` process variables and `p` actuators.
pub fn csv_column_count(n: usize, p: usize) -> usize {
    8 + 3 * n + 2 * p
}

/// The CSV document for a run: header plus one LF-terminated row per record.
pub fn render_timeseries_csv(records: &[TimeSeriesRecord]) -> Result<String> {
    let first = records
        .first()
        .ok_or_else(|| Error::param("records", "cannot write an empty run"))?;
    let (n, p) = (first.x_n.len(), first.u_a.len());
    let width = csv_column_count(n, p);

    let mut out = csv_header(n, p).join(",");
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        let s = &r.sample;
        let mut cols: Vec<String> = Vec::with_capacity(width);
        cols.push(format_sig9(s.t));
        for v in [&r.x_n, &r.x_a, &r.x_h, &r.u_a, &r.u_h] {
            cols.extend(v.iter().map(|&x| format_sig9(x)));
        }
        for x in [s.d_vod, s.d_vid, s.d_vad, s.probability, s.severity, s.risk] {
            cols.push(format_sig9(x));
        }
        cols.push(s.grade.to_string());
        if cols.len() != width {
            return Err(Error::param(
                "records",
                format!("row {i} has {} columns, expected {width}", cols.len()),
            ));
        }
        let _ = writeln!(out, "{}", cols.join(","));
    }
    Ok(out)
}

/// Write the run CSV to `destination`; returns the byte count. Nothing is
/// created for an empty run.
pub fn write_timeseries_csv(records: &[TimeSeriesRecord], destination: &Path) -> Result<u64> {
    let text = render_timeseries_csv(records)?;
    fs::write(destination, &text).map_err(|e| Error::io(format!("writing {}", destination.display()), e))?;
    Ok(text.len() as u64)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    seed: String,
    run_index: u64,
    steps: usize,
    scenario: &'a ScenarioConfig,
}

/// Everything needed to replay a run: tool version, seed, stream index and
/// the fully-resolved scenario (whose `clock.seed` is the effective seed).
pub fn render_manifest(config: &ScenarioConfig, run_index: u64) -> Result<String> {
    let manifest = Manifest {
        tool: TOOL_NAME,
        tool_version: TOOL_VERSION,
        seed: config.clock.seed.to_string(),
        run_index,
        steps: config.clock.steps(),
        scenario: config,
    };
    toml::to_string(&manifest).map_err(|e| Error::config("manifest", e.to_string()))
}

/// Recover `(scenario, run_index)` from a manifest.
pub fn parse_manifest(text: &str) -> Result<(ScenarioConfig, u64)> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("manifest", e.message().to_string()))?;
    let run_index = doc
        .get("run_index")
        .and_then(toml::Value::as_integer)
        .and_then(|v| u64::try_from(v).ok())
        .ok_or_else(|| Error::config("manifest.run_index", "missing or invalid"))?;
    let scenario = match doc.remove("scenario") {
        Some(toml::Value::Table(t)) => t,
        _ => return Err(Error::config("manifest.scenario", "missing scenario table")),
    };
    let scenario_text = toml::to_string(&scenario).map_err(|e| Error::config("manifest.scenario", e.to_string()))?;
    Ok((parse_scenario(&scenario_text, ParseMode::Strict)?.config, run_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;
    use crate::sim::run_scenario;

    fn config(duration: f64) -> ScenarioConfig {
        let doc = format!(
            "[clock]\ndt = 1.0\nduration = {duration:?}\nseed = 3\n[process]\ntime_constant = 4.0\ninitial_values = [0.5]\n"
        );
        parse_scenario(&doc, ParseMode::Strict).unwrap().config
    }

    #[test]
    fn sig9_rendering() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.1), "0.1");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.0), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(format_sig9(999999999.6), "1e+09");
        assert_eq!(format_sig9(0.0001), "0.0001");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(std::f64::consts::E - 1.0), "1.71828183");
        assert_eq!(format_sig9(f64::INFINITY), "inf");
    }

    #[test]
    fn three_steps_four_lines() {
        let records = run_scenario(&config(3.0)).unwrap();
        let csv = render_timeseries_csv(&records).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "t,x_N0,x_A0,x_H0,u_A0,u_H0,d_vod,d_vid,d_vad,P,S,R,grade");
        for line in &lines {
            assert_eq!(line.split(',').count(), csv_column_count(1, 1));
        }
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn empty_run_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        assert!(write_timeseries_csv(&[], &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn byte_count_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let records = run_scenario(&config(5.0)).unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let bytes = write_timeseries_csv(&records, &a).unwrap();
        write_timeseries_csv(&run_scenario(&config(5.0)).unwrap(), &b).unwrap();
        assert_eq!(bytes, std::fs::metadata(&a).unwrap().len());
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn unwritable_destination() {
        let records = run_scenario(&config(2.0)).unwrap();
        let err = write_timeseries_csv(&records, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn manifest_round_trip() {
        let mut cfg = config(4.0);
        cfg.clock.seed = u64::MAX - 1;
        let text = render_manifest(&cfg, 7).unwrap();
        assert!(text.contains("tool_version"));
        let (back, run_index) = parse_manifest(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(run_index, 7);
    }
}
