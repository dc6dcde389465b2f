//! CSV, JSON and SVG outputs of an analyzed run.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::zne::PASS_THRESHOLD;

use super::{hops_at, BenchmarkReport};

/// Asymptotic ideal heavy-output probability, `(1 + ln 2) / 2`.
pub fn ideal_hop_limit() -> f64 {
    (1.0 + std::f64::consts::LN_2) / 2.0
}

/// One row per circuit prefix: index, cumulative ZNE mean, its ±2σ band and
/// the cumulative mean HOP at every scale factor.
pub fn cumulative_csv(report: &BenchmarkReport) -> Result<String> {
    let lambdas: Vec<f64> = report.summary.per_lambda.iter().map(|l| l.lambda).collect();
    let columns: Vec<Vec<f64>> = lambdas
        .iter()
        .map(|&l| hops_at(&report.records, l))
        .collect::<Result<_>>()?;
    let mut out = String::from("index,zne_mean,lower_2sigma,upper_2sigma");
    for l in &lambdas {
        let _ = write!(out, ",mean_hop_lambda_{l}");
    }
    out.push('\n');
    let mut sums = vec![0.0; lambdas.len()];
    for p in &report.cumulative {
        let _ = write!(out, "{},{},{},{}", p.index, p.mean, p.mean - p.two_sigma, p.mean + p.two_sigma);
        for (s, col) in sums.iter_mut().zip(&columns) {
            *s += col[p.index];
            let _ = write!(out, ",{}", *s / (p.index + 1) as f64);
        }
        out.push('\n');
    }
    Ok(out)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

/// Cumulative ZNE mean with its 2σ band and the two reference lines.
pub fn cumulative_svg(report: &BenchmarkReport) -> String {
    let pts = &report.cumulative;
    let n = pts.len().max(2) as f64;
    let mut lo = pts.iter().map(|p| p.mean - p.two_sigma).fold(PASS_THRESHOLD, f64::min);
    let mut hi = pts.iter().map(|p| p.mean + p.two_sigma).fold(ideal_hop_limit(), f64::max);
    lo = (lo - 0.02).max(0.0);
    hi = (hi + 0.02).min(1.5);
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1.0);
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut band = String::new();
    for p in pts {
        let _ = write!(band, "{:.2},{:.2} ", x(p.index), y(p.mean + p.two_sigma));
    }
    for p in pts.iter().rev() {
        let _ = write!(band, "{:.2},{:.2} ", x(p.index), y(p.mean - p.two_sigma));
    }
    let mut line = String::new();
    for p in pts {
        let _ = write!(line, "{:.2},{:.2} ", x(p.index), y(p.mean));
    }
    let hline = |v: f64, color: &str, label: &str| {
        format!(
            "<line x1=\"{MARGIN}\" y1=\"{yv:.2}\" x2=\"{x2}\" y2=\"{yv:.2}\" stroke=\"{color}\" stroke-dasharray=\"6 4\"/>\n\
             <text x=\"{tx}\" y=\"{ty:.2}\" font-size=\"11\" fill=\"{color}\">{label}</text>\n",
            yv = y(v),
            x2 = WIDTH - MARGIN,
            tx = MARGIN + 4.0,
            ty = y(v) - 4.0,
        )
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{MARGIN}\" y=\"24\" font-size=\"14\">n = {} cumulative ZNE HOP ({} circuits)</text>\n",
        report.summary.n, report.summary.num_circuits
    );
    let _ = write!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = write!(svg, "<text x=\"8\" y=\"{:.2}\" font-size=\"11\">{hi:.3}</text>\n", y(hi) + 4.0);
    let _ = write!(svg, "<text x=\"8\" y=\"{:.2}\" font-size=\"11\">{lo:.3}</text>\n", y(lo));
    let _ = write!(svg, "<polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.5\"/>\n", band.trim_end());
    let _ = write!(svg, "<polyline points=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>\n", line.trim_end());
    svg.push_str(&hline(PASS_THRESHOLD, "#d62728", "2/3"));
    svg.push_str(&hline(ideal_hop_limit(), "#2ca02c", "(1+ln 2)/2"));
    svg.push_str("</svg>\n");
    svg
}

/// Writes `cumulative.csv`, `summary.json` and `cumulative.svg` into `dir`.
pub fn emit_report(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("cumulative.csv", cumulative_csv(report)?),
        ("summary.json", report.summary.to_json()),
        ("cumulative.svg", cumulative_svg(report)),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
