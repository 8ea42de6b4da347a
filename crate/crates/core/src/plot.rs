//! CSV and SVG rendering of area-plots.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::AreaPlot;

const SVG_WIDTH: f64 = 720.0;
const SVG_HEIGHT: f64 = 320.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Named normalized curve for charting.
pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::format("csv", e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::format("csv", e.to_string()))
}

/// Columns `slice_index, truth_ratio, truth_normalized, pred_ratio, pred_normalized`;
/// prediction columns are left empty when no prediction is given.
pub fn area_plot_csv(truth: &AreaPlot, pred: Option<&AreaPlot>) -> Result<Vec<u8>> {
    if let Some(p) = pred {
        if p.len() != truth.len() {
            return Err(Error::geometry(format!(
                "truth has {} slices, prediction {}",
                truth.len(),
                p.len()
            )));
        }
    }
    let header = ["slice_index", "truth_ratio", "truth_normalized", "pred_ratio", "pred_normalized"]
        .map(String::from)
        .to_vec();
    let rows = (0..truth.len()).map(|i| {
        let (pr, pn) = match pred {
            Some(p) => (p.ratios[i].to_string(), p.normalized[i].to_string()),
            None => (String::new(), String::new()),
        };
        vec![
            i.to_string(),
            truth.ratios[i].to_string(),
            truth.normalized[i].to_string(),
            pr,
            pn,
        ]
    });
    csv_bytes(&header, rows)
}

/// One normalized column per series, indexed by slice.
pub fn series_csv(series: &[Series]) -> Result<Vec<u8>> {
    let len = series.first().map_or(0, |s| s.values.len());
    if series.iter().any(|s| s.values.len() != len) {
        return Err(Error::geometry("series differ in length"));
    }
    let mut header = vec!["slice_index".to_string()];
    header.extend(series.iter().map(|s| s.name.to_string()));
    let rows = (0..len).map(|i| {
        let mut row = vec![i.to_string()];
        row.extend(series.iter().map(|s| s.values[i].to_string()));
        row
    });
    csv_bytes(&header, rows)
}

/// Line chart of normalized area versus slice index.
pub fn line_chart_svg(title: &str, series: &[Series]) -> String {
    let len = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let plot_w = SVG_WIDTH - 2.0 * MARGIN;
    let plot_h = SVG_HEIGHT - 2.0 * MARGIN;
    let x_of = |i: usize| MARGIN + plot_w * i as f64 / (len.max(2) - 1) as f64;
    let y_of = |v: f64| MARGIN + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SVG_WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, SVG_WIDTH - MARGIN, MARGIN, SVG_HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">slice index (0..{})</text>"#,
        SVG_WIDTH / 2.0,
        SVG_HEIGHT - 10.0,
        len.saturating_sub(1)
    );
    let _ = writeln!(
        svg,
        r#"<text x="12" y="{}" font-family="sans-serif" font-size="11" transform="rotate(-90 12 {})" text-anchor="middle">normalized area</text>"#,
        SVG_HEIGHT / 2.0,
        SVG_HEIGHT / 2.0
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11" fill="{color}" text-anchor="end">{}</text>"#,
            x1,
            escape(s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
