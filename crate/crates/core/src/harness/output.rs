use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::drl::EpisodeLog;
use crate::error::{Error, Result};
use crate::game::bit_string;

/// Leading CSV columns of every learning log; probe Q columns follow.
pub const LOG_COLUMNS: [&str; 10] = [
    "scenario",
    "seed",
    "episode",
    "step",
    "state_id",
    "alpha_bits",
    "beta_bits",
    "reward",
    "loss_device",
    "loss_attacker",
];

/// Columns of the covariance trace series.
pub const TRACE_COLUMNS: [&str; 3] = ["k", "gamma_bits", "trace"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv(
    log: &EpisodeLog,
    scenario: &str,
    seed: u64,
    path: impl AsRef<Path>,
) -> Result<()> {
    if log.rows.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = LOG_COLUMNS.to_vec();
    header.extend(log.q_columns.iter().map(String::as_str));
    w.write_record(&header)?;
    let blank = vec![String::new(); log.q_columns.len()];
    for row in &log.rows {
        let mut rec = vec![
            scenario.to_string(),
            seed.to_string(),
            row.episode.to_string(),
            row.step.to_string(),
            row.state_id.clone(),
            bit_string(&row.alpha),
            bit_string(&row.beta),
            row.reward.to_string(),
            opt(row.loss_device),
            opt(row.loss_attacker),
        ];
        match &row.q {
            Some(q) => rec.extend(q.iter().map(f64::to_string)),
            None => rec.extend(blank.iter().cloned()),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One point of a forced-loss trace series.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TracePoint {
    pub k: usize,
    /// Arrival pattern applied to reach this point; empty at `k = 0`.
    pub gamma: Vec<bool>,
    pub trace: f64,
}

pub fn write_trace_csv(points: &[TracePoint], path: impl AsRef<Path>) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_COLUMNS)?;
    for p in points {
        w.write_record([
            p.k.to_string(),
            bit_string(&p.gamma),
            format!("{:.6}", p.trace),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Line chart of `ys` against `x`, read back from a CSV file. Empty cells are
/// skipped. With `log_y` values are drawn on a log10 axis (non-positive values
/// dropped).
pub fn emit_plot(
    csv_path: impl AsRef<Path>,
    svg_path: impl AsRef<Path>,
    x: &str,
    ys: &[&str],
    log_y: bool,
) -> Result<()> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Validation(format!("plot column {name:?} not in CSV")))
    };
    let xi = col(x)?;
    let yi: Vec<usize> = ys.iter().map(|y| col(y)).collect::<Result<_>>()?;
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ys.len()];
    for rec in reader.records() {
        let rec = rec?;
        let Ok(xv) = rec[xi].parse::<f64>() else {
            continue;
        };
        for (s, &i) in series.iter_mut().zip(&yi) {
            if let Ok(v) = rec[i].parse::<f64>() {
                if log_y && v <= 0.0 {
                    continue;
                }
                s.push((xv, if log_y { v.log10() } else { v }));
            }
        }
    }
    let points: Vec<&(f64, f64)> = series.iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::EmptyLog);
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let (lo, hi) = points
            .iter()
            .map(|p| f(p))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                (l.min(v), h.max(v))
            });
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let label = |v: f64| {
        if log_y {
            format!("1e{v:.1}")
        } else {
            format!("{v:.4}")
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{l}" y="{}" text-anchor="start">{}</text>"#,
        b + 16.0,
        x0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{r}" y="{}" text-anchor="end">{}</text>"#,
        b + 16.0,
        x1
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{b}" text-anchor="end">{}</text>"#,
        l - 4.0,
        label(y0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        l - 4.0,
        t + 4.0,
        label(y1)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 12.0
    );
    for (i, (s, name)) in series.iter().zip(ys).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .iter()
            .map(|&(a, v)| format!("{:.2},{:.2}", px(a), py(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" stroke="{color}" stroke-width="1.2" fill="none"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            r - 120.0,
            t + 14.0 * (i as f64 + 1.0)
        );
    }
    svg.push_str("</svg>\n");
    fs::File::create(svg_path)?.write_all(svg.as_bytes())?;
    Ok(())
}
