//! Post-sweep analysis: descriptive statistics of critical runs and
//! random-forest Gini importance of the design factors.

mod forest;
mod stats;

pub use forest::{
    fit_forest, fit_forest_with, gini_importances, Dataset, Forest, ForestConfig, ForestError,
    ImportanceReport, Tree, TreeNode,
};
pub use stats::{describe, quantile_sorted, StatsError, SummaryStats};

use std::io::{self, Write};

use crate::experiments::{level_bit, RunRecord};
use crate::params::Factor;

/// A run is critical when it lost at least one drone.
pub fn label_critical(asrd: f64) -> bool {
    asrd < 1.0
}

/// Factor-level matrix (0 = low, 1 = high) and critical labels for every run.
pub fn dataset_from_records(records: &[RunRecord]) -> Result<Dataset, ForestError> {
    let features = records
        .iter()
        .map(|r| {
            Factor::ALL
                .map(|f| u8::from(level_bit(r.point_id, f)))
                .to_vec()
        })
        .collect();
    let labels = records.iter().map(|r| label_critical(r.asrd)).collect();
    Dataset::new(features, labels)?.with_names(Factor::ALL.map(Factor::symbol).to_vec())
}

/// ASRD values of the critical runs, in record order.
pub fn critical_asrd(records: &[RunRecord]) -> Vec<f64> {
    records
        .iter()
        .filter(|r| label_critical(r.asrd))
        .map(|r| r.asrd)
        .collect()
}

pub const STATS_HEADER: &str = "metric,value";

/// One row per summary field. With no data every metric but `count` is empty.
pub fn write_stats_csv<W: Write>(mut out: W, stats: Option<&SummaryStats>) -> io::Result<()> {
    writeln!(out, "{STATS_HEADER}")?;
    match stats {
        Some(s) => {
            writeln!(out, "count,{}", s.count)?;
            for (name, value) in s.metrics() {
                writeln!(out, "{name},{value:.6}")?;
            }
        }
        None => {
            writeln!(out, "count,0")?;
            for name in SummaryStats::METRIC_NAMES {
                writeln!(out, "{name},")?;
            }
        }
    }
    Ok(())
}

pub const IMPORTANCE_HEADER: &str = "factor,importance,rank";

/// Rows in rank order.
pub fn write_importance_csv<W: Write>(mut out: W, report: &ImportanceReport) -> io::Result<()> {
    writeln!(out, "{IMPORTANCE_HEADER}")?;
    for (rank, &feature) in report.ranking.iter().enumerate() {
        writeln!(
            out,
            "{},{:.9},{}",
            report.names[feature],
            report.importances[feature],
            rank + 1
        )?;
    }
    Ok(())
}
