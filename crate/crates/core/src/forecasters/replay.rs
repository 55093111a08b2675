//! Replay of point forecasts produced by external tooling.
//!
//! Trace CSV: header `index,y_true,y_hat`, one row per index, strictly
//! increasing and gap-free.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::series::TimeSeries;

/// Largest allowed `|y_true - series[index]|`.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: i64,
    pub y_true: f64,
    pub y_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalForecastTrace {
    records: Vec<TraceRecord>,
}

impl ExternalForecastTrace {
    pub fn new(records: Vec<TraceRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidParameter("trace is empty".into()));
        }
        for pair in records.windows(2) {
            if pair[1].index != pair[0].index + 1 {
                return Err(Error::Alignment {
                    index: pair[1].index,
                    message: format!(
                        "trace indices must be gap-free; previous index {}",
                        pair[0].index
                    ),
                });
            }
        }
        if let Some(r) = records
            .iter()
            .find(|r| !r.y_true.is_finite() || !r.y_hat.is_finite())
        {
            return Err(Error::NonFinite(format!("trace row at index {}", r.index)));
        }
        Ok(Self { records })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = io::read_numeric_csv(path, &["index", "y_true", "y_hat"])?;
        let records = rows
            .into_iter()
            .map(|(index, vals)| TraceRecord {
                index,
                y_true: vals[0],
                y_hat: vals[1],
            })
            .collect();
        Self::new(records)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("index,y_true,y_hat\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.index, r.y_true, r.y_hat));
        }
        io::write_atomic(path, out.as_bytes())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn first_index(&self) -> i64 {
        self.records[0].index
    }

    pub fn last_index(&self) -> i64 {
        self.records[self.records.len() - 1].index
    }

    fn get(&self, index: i64) -> Option<&TraceRecord> {
        let offset = usize::try_from(index - self.first_index()).ok()?;
        self.records.get(offset)
    }

    /// Errors with the first missing stretch of `indices` not covered by the trace.
    pub fn check_covers(&self, indices: Range<i64>) -> Result<()> {
        if indices.is_empty() {
            return Ok(());
        }
        let (first, last) = (self.first_index(), self.last_index());
        if indices.start < first {
            return Err(Error::MissingTrace {
                start: indices.start,
                end: (first - 1).min(indices.end - 1),
            });
        }
        if indices.end - 1 > last {
            return Err(Error::MissingTrace {
                start: (last + 1).max(indices.start),
                end: indices.end - 1,
            });
        }
        Ok(())
    }

    /// Every trace row that falls inside the series must agree on `y_true`.
    pub fn check_alignment(&self, series: &TimeSeries) -> Result<()> {
        for r in &self.records {
            if let Some(pos) = series.position_of(r.index) {
                check_value(r, series.values()[pos])?;
            }
        }
        Ok(())
    }

    /// Stored forecast at `index`, after checking it against the series.
    pub fn replay_predict(&self, index: i64, series: &TimeSeries) -> Result<f64> {
        let record = self.get(index).ok_or(Error::MissingTrace {
            start: index,
            end: index,
        })?;
        let pos = series.position_of(index).ok_or_else(|| Error::Alignment {
            index,
            message: "index outside the loaded series".into(),
        })?;
        check_value(record, series.values()[pos])?;
        Ok(record.y_hat)
    }
}

fn check_value(record: &TraceRecord, actual: f64) -> Result<()> {
    if (record.y_true - actual).abs() > ALIGNMENT_TOLERANCE {
        return Err(Error::Alignment {
            index: record.index,
            message: format!("trace y_true {} but series has {}", record.y_true, actual),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> TimeSeries {
        TimeSeries::new(
            (0..20)
                .map(|i| if i == 10 { 2.0 } else { i as f64 })
                .collect(),
        )
        .unwrap()
    }

    fn trace(y10: f64) -> ExternalForecastTrace {
        ExternalForecastTrace::new(vec![
            TraceRecord {
                index: 9,
                y_true: 9.0,
                y_hat: 8.5,
            },
            TraceRecord {
                index: 10,
                y_true: y10,
                y_hat: 1.9,
            },
            TraceRecord {
                index: 11,
                y_true: 11.0,
                y_hat: 10.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn replays_stored_value() {
        assert_eq!(trace(2.0).replay_predict(10, &series()).unwrap(), 1.9);
    }

    #[test]
    fn mismatch_names_index() {
        let err = trace(2.5).replay_predict(10, &series()).unwrap_err();
        assert!(matches!(err, Error::Alignment { index: 10, .. }), "{err}");
        assert!(err.to_string().contains("index 10"));
        assert!(trace(2.5).check_alignment(&series()).is_err());
    }

    #[test]
    fn missing_index() {
        let err = trace(2.0).replay_predict(12, &series()).unwrap_err();
        assert!(matches!(err, Error::MissingTrace { start: 12, end: 12 }));
    }

    #[test]
    fn coverage_check_lists_missing_range() {
        let t = trace(2.0);
        assert!(t.check_covers(9..12).is_ok());
        assert!(matches!(
            t.check_covers(9..20),
            Err(Error::MissingTrace { start: 12, end: 19 })
        ));
        assert!(matches!(
            t.check_covers(5..11),
            Err(Error::MissingTrace { start: 5, end: 8 })
        ));
    }

    #[test]
    fn gaps_rejected() {
        let err = ExternalForecastTrace::new(vec![
            TraceRecord {
                index: 1,
                y_true: 0.0,
                y_hat: 0.0,
            },
            TraceRecord {
                index: 3,
                y_true: 0.0,
                y_hat: 0.0,
            },
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Alignment { index: 3, .. }));
    }
}
