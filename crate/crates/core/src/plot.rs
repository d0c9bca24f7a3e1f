//! SVG renderings of single-fault VOD signatures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::injectors::{vod_signature, FaultKind, SignatureSetup};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// A standalone SVG 1.1 line chart of `series` (time, VOD) with a dashed
/// marker at the fault onset `t0`.
pub fn render_signature_svg(title: &str, series: &[(f64, f64)], t0: f64) -> String {
    let (t_min, t_max) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| {
            (lo.min(t), hi.max(t))
        });
    let (v_lo, v_hi) = series
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    let pad = if v_hi > v_lo { 0.08 * (v_hi - v_lo) } else { 1.0 };
    let (v_min, v_max) = (v_lo - pad, v_hi + pad);
    let t_span = if t_max > t_min { t_max - t_min } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t_min) / t_span * plot_w;
    let sy = |v: f64| TOP + (v_max - v) / (v_max - v_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, "<title>{title}</title>");
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );

    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M {x0} {y0} L {x0} {y1} L {x1} {y1}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for i in 0..=TICKS {
        let frac = i as f64 / TICKS as f64;
        let t = t_min + frac * t_span;
        let x = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            y1 + 5.0,
            y1 + 18.0,
            tick_label(t)
        );
        let v = v_min + frac * (v_max - v_min);
        let y = sy(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">time (s)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">VOD</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    if (t_min..=t_max).contains(&t0) {
        let x = sx(t0);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="gray" stroke-dasharray="4 3"/>"#
        );
    }
    if v_min < 0.0 && v_max > 0.0 {
        let y = sy(0.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="lightgray"/>"#
        );
    }

    let points: Vec<String> = series
        .iter()
        .map(|&(t, v)| format!("{:.3},{:.3}", sx(t), sy(v)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}

/// The (time, VOD) series plotted for `kind`; identical to
/// [`vod_signature`].
pub fn signature_series(kind: &FaultKind, setup: &SignatureSetup) -> Result<Vec<(f64, f64)>> {
    vod_signature(kind, setup)
}

/// Write one `vod_<kind>.svg` per requested kind into `destination`.
pub fn emit_fault_signature_plots(
    kinds: &[FaultKind],
    setup: &SignatureSetup,
    destination: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(destination).map_err(|e| Error::io(format!("creating {}", destination.display()), e))?;
    let mut written: Vec<PathBuf> = Vec::with_capacity(kinds.len());
    for (i, kind) in kinds.iter().enumerate() {
        let series = signature_series(kind, setup)?;
        let title = format!("VOD signature: {} (onset at {} s)", kind.name(), setup.t0);
        let mut path = destination.join(format!("vod_{}.svg", kind.name()));
        if written.contains(&path) {
            path = destination.join(format!("vod_{}_{i}.svg", kind.name()));
        }
        fs::write(&path, render_signature_svg(&title, &series, setup.t0))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::injectors::KIND_NAMES;

    fn all_kinds() -> Vec<FaultKind> {
        KIND_NAMES.iter().map(|n| FaultKind::schematic(n).unwrap()).collect()
    }

    #[test]
    fn seven_kinds_seven_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_fault_signature_plots(&all_kinds(), &SignatureSetup::default(), dir.path()).unwrap();
        assert_eq!(files.len(), 7);
        for f in &files {
            let text = fs::read_to_string(f).unwrap();
            assert!(text.starts_with("<?xml"));
            assert!(text.contains(r#"version="1.1""#));
            assert!(text.contains("time (s)") && text.contains(">VOD<"));
            assert!(text.trim_end().ends_with("</svg>"));
        }
    }

    #[test]
    fn duplicate_kinds_get_distinct_files() {
        let dir = tempfile::tempdir().unwrap();
        let kinds = vec![FaultKind::Drift { slope: 0.1 }, FaultKind::Drift { slope: -0.1 }];
        let files = emit_fault_signature_plots(&kinds, &SignatureSetup::default(), dir.path()).unwrap();
        assert_ne!(files[0], files[1]);
    }

    #[test]
    fn series_is_the_signature() {
        let setup = SignatureSetup::default();
        for kind in all_kinds() {
            assert_eq!(
                signature_series(&kind, &setup).unwrap(),
                vod_signature(&kind, &setup).unwrap()
            );
        }
    }

    #[test]
    fn bias_plot_data_steps_at_onset() {
        let setup = SignatureSetup::default();
        let kind = FaultKind::Bias {
            delta: 2.5,
            sign: crate::injectors::Sign::Plus,
        };
        for (t, v) in signature_series(&kind, &setup).unwrap() {
            assert_eq!(v, if t < 100.0 { 0.0 } else { 2.5 }, "t={t}");
        }
    }

    #[test]
    fn drift_plot_data_is_zero_then_ramp() {
        let setup = SignatureSetup::default();
        for (t, v) in signature_series(&FaultKind::Drift { slope: 0.1 }, &setup).unwrap() {
            let expected = if t < 100.0 { 0.0 } else { 0.1 * (t - 100.0) };
            assert!((v - expected).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn polyline_has_one_point_per_sample() {
        let series = [(0.0, 0.0), (1.0, 0.0), (2.0, 3.0)];
        let svg = render_signature_svg("x", &series, 1.0);
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), 3);
    }

    #[test]
    fn unwritable_destination() {
        let err = emit_fault_signature_plots(&all_kinds(), &SignatureSetup::default(), Path::new("/proc/nope/plots"));
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
