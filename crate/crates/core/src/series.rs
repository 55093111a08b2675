//! Series container, train/calibration/test splits, standard scaling and lag
//! embedding.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered, finite, non-empty sequence of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    start_index: i64,
    /// Sampling period, informational only.
    step: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_index(values, 0, 1.0)
    }

    pub fn with_index(values: Vec<f64>, start_index: i64, step: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value {} at position {pos}",
                values[pos]
            )));
        }
        Ok(Self {
            values,
            start_index,
            step,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// External index of the value at `position`.
    pub fn index_at(&self, position: usize) -> i64 {
        self.start_index + position as i64
    }

    /// Position of an external index, if it lies inside the series.
    pub fn position_of(&self, index: i64) -> Option<usize> {
        let offset = index.checked_sub(self.start_index)?;
        usize::try_from(offset)
            .ok()
            .filter(|&p| p < self.values.len())
    }

    pub fn window(&self, range: Range<usize>) -> Result<&[f64]> {
        if range.start > range.end || range.end > self.values.len() {
            return Err(Error::InvalidParameter(format!(
                "range {range:?} outside series of length {}",
                self.values.len()
            )));
        }
        Ok(&self.values[range])
    }
}

/// Half-open split boundaries: train `[0, train_end)`, calibration
/// `[train_end, cal_end)`, test `[cal_end, test_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_end: usize,
    pub cal_end: usize,
    pub test_end: usize,
}

impl SplitSpec {
    pub fn new(train_end: usize, cal_end: usize, test_end: usize, len: usize) -> Result<Self> {
        if !(0 < train_end && train_end <= cal_end && cal_end <= test_end && test_end <= len) {
            return Err(Error::InvalidSplit(format!(
                "need 0 < train_end ({train_end}) <= cal_end ({cal_end}) <= test_end ({test_end}) <= len ({len})"
            )));
        }
        Ok(Self {
            train_end,
            cal_end,
            test_end,
        })
    }

    /// Splits `len` points by train/calibration/test fractions. Boundaries are
    /// rounded on the cumulative fractions; the test window ends at `len`.
    pub fn from_fractions(len: usize, fractions: [f64; 3]) -> Result<Self> {
        if fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::InvalidSplit(format!(
                "fractions must be positive, got {fractions:?}"
            )));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!(
                "fractions must sum to 1, got {total}"
            )));
        }
        let n = len as f64;
        let train_end = (n * fractions[0]).round() as usize;
        let cal_end = (n * (fractions[0] + fractions[1])).round() as usize;
        Self::new(train_end, cal_end, len, len)
    }

    pub fn train(&self) -> Range<usize> {
        0..self.train_end
    }

    pub fn calibration(&self) -> Range<usize> {
        self.train_end..self.cal_end
    }

    pub fn test(&self) -> Range<usize> {
        self.cal_end..self.test_end
    }
}

/// Affine standardization `z = (x - mean) / std` fitted on a training window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub mean: f64,
    pub std: f64,
}

impl StandardScaler {
    /// Sample mean and sample standard deviation (n - 1 denominator) of
    /// `series[range]`. Constant or single-point windows are rejected.
    pub fn fit(series: &TimeSeries, range: Range<usize>) -> Result<Self> {
        let (start, end) = (range.start, range.end);
        let window = series.window(range)?;
        Self::fit_slice(window).map_err(|e| match e {
            Error::DegenerateWindow { reason, .. } => {
                Error::DegenerateWindow { start, end, reason }
            }
            other => other,
        })
    }

    pub fn fit_slice(window: &[f64]) -> Result<Self> {
        let n = window.len();
        if n < 2 {
            return Err(Error::DegenerateWindow {
                start: 0,
                end: n,
                reason: "fewer than 2 points",
            });
        }
        let first = window[0];
        if window.iter().all(|&v| v == first) {
            return Err(Error::DegenerateWindow {
                start: 0,
                end: n,
                reason: "constant values",
            });
        }
        let mean = window.iter().sum::<f64>() / n as f64;
        let ss: f64 = window.iter().map(|v| (v - mean).powi(2)).sum();
        let std = (ss / (n - 1) as f64).sqrt();
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::DegenerateWindow {
                start: 0,
                end: n,
                reason: "zero or non-finite variance",
            });
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn inverse_transform(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    /// Maps a scaled distance (e.g. a half-width) back to target units.
    pub fn inverse_scale(&self, d: f64) -> f64 {
        d * self.std
    }

    pub fn transform_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&x| self.transform(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagRow {
    /// `(y_{t-L}, ..., y_{t-1})`, oldest first.
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrix {
    pub lag: usize,
    pub rows: Vec<LagRow>,
}

impl LagMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Lag embedding of a window: one row per target with the `lag` preceding
/// values as features. Produces `window.len() - lag` rows.
pub fn lag_embed(window: &[f64], lag: usize) -> Result<LagMatrix> {
    if lag == 0 {
        return Err(Error::InvalidParameter("lag must be positive".into()));
    }
    if window.len() <= lag {
        return Err(Error::WindowTooShort {
            needed: lag + 1,
            got: window.len(),
        });
    }
    let rows = window
        .windows(lag + 1)
        .map(|w| LagRow {
            features: w[..lag].to_vec(),
            target: w[lag],
        })
        .collect();
    Ok(LagMatrix { lag, rows })
}

/// Lag embedding of `series[range]`.
pub fn lag_embed_range(series: &TimeSeries, lag: usize, range: Range<usize>) -> Result<LagMatrix> {
    lag_embed(series.window(range)?, lag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    SubHourly,
    Monthly,
    #[default]
    Other,
}

/// Default lag length for a sampling frequency.
pub fn default_lag(frequency: Frequency) -> usize {
    match frequency {
        Frequency::SubHourly => 48,
        Frequency::Monthly => 12,
        Frequency::Other => 24,
    }
}
