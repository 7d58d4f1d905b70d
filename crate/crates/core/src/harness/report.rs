//! Result serialization: the sweep CSV schema and SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

use super::sweep::{SweepResult, SweepRow};

/// Fixed column schema for sweep CSVs.
pub const CSV_HEADER: &str =
    "method,snr_db,trials,errors,pe,ci_lo,ci_hi,config_hash,seed_data,seed_model,seed_eval";

fn push_row(out: &mut String, result: &SweepResult, row: &SweepRow) {
    let (lo, hi) = row.ci();
    let _ = writeln!(
        out,
        "{},{},{},{},{:.8},{:.8},{:.8},{},{},{},{}",
        row.label(),
        row.snr_db,
        row.trials,
        row.errors,
        row.pe(),
        lo,
        hi,
        result.config_hash,
        result.seeds.data,
        result.seeds.model,
        result.seeds.eval,
    );
}

/// Renders a sweep result as CSV text.
pub fn csv_string(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        push_row(&mut out, result, row);
    }
    out
}

/// Renders several results into one CSV (same schema; rows are
/// distinguished by their config hash and tags).
pub fn merged_csv_string(results: &[&SweepResult]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for result in results {
        for row in &result.rows {
            push_row(&mut out, result, row);
        }
    }
    out
}

/// Writes [`csv_string`] to a file.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(result))?;
    Ok(())
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Series {
    label: String,
    points: Vec<(f64, f64, f64, f64)>, // snr, pe, ci_lo, ci_hi
}

fn collect_series(result: &SweepResult) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for row in &result.rows {
        let label = row.label();
        let (lo, hi) = row.ci();
        let point = (row.snr_db, row.pe(), lo, hi);
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                label,
                points: vec![point],
            }),
        }
    }
    for s in &mut series {
        s.points
            .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite snr"));
    }
    series
}

/// Writes a log-scale error-probability plot for the sweep.
///
/// Zero-error cells are clamped to half the resolution floor (1 / 2
/// trials) so they stay visible on the log axis.
pub fn write_svg(result: &SweepResult, path: &Path, title: &str) -> Result<()> {
    let series = collect_series(result);
    let width = 720.0;
    let height = 480.0;
    let (ml, mr, mt, mb) = (70.0, 160.0, 40.0, 50.0);
    let pw = width - ml - mr;
    let ph = height - mt - mb;

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut floor: f64 = 1.0;
    for s in &series {
        for &(x, _, _, _) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
    }
    for row in &result.rows {
        floor = floor.min(1.0 / (2.0 * row.trials as f64));
    }
    if !x_min.is_finite() || x_min == x_max {
        x_max = x_min + 1.0;
    }
    let y_lo = floor.log10().floor();
    let y_hi = 0.0; // pe <= 1
    let x_pos = |x: f64| ml + (x - x_min) / (x_max - x_min) * pw;
    let y_pos = |pe: f64| {
        let v = pe.max(floor).log10().clamp(y_lo, y_hi);
        mt + (y_hi - v) / (y_hi - y_lo) * ph
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        xml_escape(title)
    );

    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#,
        mt + ph
    );

    // Y decade ticks and gridlines.
    let mut decade = y_lo as i64;
    while decade <= y_hi as i64 {
        let y = y_pos(10f64.powi(decade as i32));
        let _ = writeln!(
            svg,
            r##"<line x1="{ml}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/>"##,
            ml + pw
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">1e{decade}</text>"#,
            ml - 8.0,
            y + 4.0
        );
        decade += 1;
    }

    // X ticks at observed SNR values.
    let mut xs: Vec<f64> = result.rows.iter().map(|r| r.snr_db).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite snr"));
    xs.dedup();
    for x in xs {
        let px = x_pos(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="black"/>"#,
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{x}</text>"#,
            mt + ph + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">SNR (dB)</text>"#,
        ml + pw / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 18 {})">error probability</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );

    // Series: CI whiskers, polyline, markers, legend.
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for &(x, _, lo, hi) in &s.points {
            let px = x_pos(x);
            let _ = writeln!(
                svg,
                r#"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="{color}" stroke-width="1" opacity="0.6"/>"#,
                y_pos(hi),
                y_pos(lo)
            );
        }
        let path_points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, pe, _, _)| format!("{:.2},{:.2}", x_pos(x), y_pos(pe)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path_points.join(" ")
        );
        for &(x, pe, _, _) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                x_pos(x),
                y_pos(pe)
            );
        }
        let ly = mt + 16.0 * si as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/>"#,
            ml + pw + 12.0,
            ly
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            ml + pw + 30.0,
            ly + 10.0,
            xml_escape(&s.label)
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
