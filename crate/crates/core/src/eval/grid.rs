use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_rolling, RunConfig, RunKey, RunMetrics, RunReport};
use crate::conformal::Method;
use crate::error::{Error, ErrorKind, Result};
use crate::parallel::{self, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub key: RunKey,
    pub outcome: std::result::Result<RunReport, CellFailure>,
}

/// A failed run, detached from the error value so cells stay comparable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CellFailure {
    fn from(e: Error) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

/// Runs every config independently and returns cells sorted by
/// `(dataset, forecaster, method)`. A failing run is recorded, not fatal.
pub fn grid_run(configs: &[RunConfig], base_dir: &Path, exec: Execution) -> Vec<GridCell> {
    let mut cells = parallel::map(exec, configs, |cfg| GridCell {
        key: cfg.key(cfg.forecaster.name()),
        outcome: run_rolling(cfg, base_dir).map_err(CellFailure::from),
    });
    cells.sort_by(|a, b| a.key.cmp(&b.key));
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One object of a metrics JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub dataset: String,
    pub forecaster: String,
    pub method: Method,
    pub alpha: f64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<RunMetrics>,
}

impl MetricsRecord {
    pub fn from_report(report: &RunReport) -> Self {
        Self {
            dataset: report.key.dataset.clone(),
            forecaster: report.key.forecaster.clone(),
            method: report.key.method,
            alpha: report.alpha,
            status: RunStatus::Ok,
            error: None,
            metrics: Some(report.metrics.clone()),
        }
    }

    pub fn failed(key: &RunKey, alpha: f64, error: String) -> Self {
        Self {
            dataset: key.dataset.clone(),
            forecaster: key.forecaster.clone(),
            method: key.method,
            alpha,
            status: RunStatus::Failed,
            error: Some(error),
            metrics: None,
        }
    }

    pub fn key(&self) -> RunKey {
        RunKey {
            dataset: self.dataset.clone(),
            forecaster: self.forecaster.clone(),
            method: self.method,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Ok {
        coverage: Option<f64>,
        median_width: Option<f64>,
    },
    Failed,
}

/// Datasets as rows; per-column coverage and median interval width blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    coverage_header: String,
    datasets: Vec<String>,
    columns: Vec<String>,
    cells: BTreeMap<(String, String), Cell>,
}

const FAILED: &str = "—";
const ABSENT: &str = "n/a";

impl ComparisonTable {
    /// Errors if the same (dataset, forecaster, method) appears twice with
    /// different contents.
    pub fn from_records(records: &[MetricsRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidParameter(
                "no metrics records to report".into(),
            ));
        }
        let mut seen: BTreeMap<RunKey, &MetricsRecord> = BTreeMap::new();
        for r in records {
            if let Some(prev) = seen.insert(r.key(), r) {
                if prev != r {
                    return Err(Error::InvalidParameter(format!(
                        "conflicting results for {}",
                        r.key()
                    )));
                }
            }
        }

        let alphas: BTreeSet<u64> = seen
            .values()
            .filter(|r| r.method != Method::None)
            .map(|r| r.alpha.to_bits())
            .collect();
        let coverage_header = match alphas.iter().next() {
            Some(&bits) if alphas.len() == 1 => format!(
                "Coverage@{}%",
                trim_float(100.0 * (1.0 - f64::from_bits(bits)))
            ),
            _ => "Coverage".to_string(),
        };

        let mut datasets = BTreeSet::new();
        let mut columns = BTreeSet::new();
        let mut cells = BTreeMap::new();
        for (key, r) in &seen {
            datasets.insert(key.dataset.clone());
            columns.insert(key.column());
            let cell = match (&r.status, &r.metrics) {
                (RunStatus::Ok, Some(m)) => Cell::Ok {
                    coverage: m.coverage,
                    median_width: m.median_width,
                },
                _ => Cell::Failed,
            };
            cells.insert((key.dataset.clone(), key.column()), cell);
        }
        Ok(Self {
            coverage_header,
            datasets: datasets.into_iter().collect(),
            columns: columns.into_iter().collect(),
            cells,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.datasets.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["dataset".to_string()];
        h.extend(
            self.columns
                .iter()
                .map(|c| format!("{} {c}", self.coverage_header)),
        );
        h.extend(
            self.columns
                .iter()
                .map(|c| format!("Median Interval Length {c}")),
        );
        h
    }

    fn row(&self, dataset: &str) -> Vec<String> {
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.3}"),
            None => ABSENT.to_string(),
        };
        let mut row = vec![dataset.to_string()];
        for pick_width in [false, true] {
            for col in &self.columns {
                row.push(match self.cells.get(&(dataset.to_string(), col.clone())) {
                    None => ABSENT.to_string(),
                    Some(Cell::Failed) => FAILED.to_string(),
                    Some(Cell::Ok {
                        coverage,
                        median_width,
                    }) => fmt(if pick_width { *median_width } else { *coverage }),
                });
            }
        }
        row
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for d in &self.datasets {
            out.push_str(&self.row(d).join(","));
            out.push('\n');
        }
        out
    }

    /// Whitespace-aligned rendering for terminals.
    pub fn to_text(&self) -> String {
        let mut lines = vec![self.header()];
        lines.extend(self.datasets.iter().map(|d| self.row(d)));
        let ncols = lines[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|j| {
                lines
                    .iter()
                    .map(|l| l[j].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for line in &lines {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| {
                    let pad = w - c.chars().count();
                    if j == 0 {
                        format!("{c}{}", " ".repeat(pad))
                    } else {
                        format!("{}{c}", " ".repeat(pad))
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
