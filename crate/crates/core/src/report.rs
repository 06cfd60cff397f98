//! Standalone SVG bar chart of factor importances.

use std::fmt::Write as _;
use std::io::Read;

use serde::Deserialize;
use thiserror::Error;

use crate::analysis::IMPORTANCE_HEADER;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ImportanceRow {
    pub factor: String,
    pub importance: f64,
    pub rank: u32,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("importance header mismatch: expected `{IMPORTANCE_HEADER}`, found `{0}`")]
    Header(String),
    #[error("importance file has no rows")]
    Empty,
    #[error("factor `{0}`: importance must be a finite non-negative number")]
    BadValue(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn read_importance_csv<R: Read>(input: R) -> Result<Vec<ImportanceRow>, ReportError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != IMPORTANCE_HEADER {
        return Err(ReportError::Header(header));
    }
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<ImportanceRow>, _>>()?;
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    if let Some(bad) = rows
        .iter()
        .find(|r| !r.importance.is_finite() || r.importance < 0.0)
    {
        return Err(ReportError::BadValue(bad.factor.clone()));
    }
    Ok(rows)
}

const WIDTH: f64 = 640.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BAR: f64 = 22.0;
const GAP: f64 = 8.0;
const AXIS_SPACE: f64 = 40.0;
const TICKS: usize = 4;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Horizontal bars sorted by descending importance on a `0..max` axis.
///
/// An all-zero input is drawn on a `0..1` axis.
pub fn render_importance_svg(rows: &[ImportanceRow]) -> String {
    let mut sorted: Vec<&ImportanceRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    let max = sorted.first().map_or(0.0, |r| r.importance);
    let axis_max = if max > 0.0 { max } else { 1.0 };
    let plot = WIDTH - LEFT - RIGHT;
    let plot_height = sorted.len() as f64 * (BAR + GAP);
    let height = TOP + plot_height + AXIS_SPACE;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">Variable importance (mean decrease in Gini impurity)</text>"#,
        WIDTH / 2.0
    );
    for (i, row) in sorted.iter().enumerate() {
        let y = TOP + i as f64 * (BAR + GAP);
        let w = row.importance / axis_max * plot;
        let _ = writeln!(
            svg,
            r##"<rect class="bar" x="{LEFT}" y="{y:.2}" width="{w:.2}" height="{BAR}" fill="#4878a8"><title>{}: {:.6}</title></rect>"##,
            escape(&row.factor),
            row.importance
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            LEFT - 6.0,
            y + BAR / 2.0,
            escape(&row.factor)
        );
    }
    let axis_y = TOP + plot_height;
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        LEFT + plot
    );
    for t in 0..=TICKS {
        let frac = t as f64 / TICKS as f64;
        let x = LEFT + frac * plot;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            axis_y + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#,
            axis_y + 18.0,
            frac * axis_max
        );
    }
    svg.push_str("</svg>\n");
    svg
}
