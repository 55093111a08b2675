//! Two-sided CUSUM on forecast residuals.
//!
//! Residuals are standardized against reference statistics taken from a
//! warm-up window. After an alarm both sums reset and the detector collects a
//! fresh warm-up window before monitoring again.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CusumParams {
    /// Allowance `k`, in residual standard deviations.
    pub drift: f64,
    /// Decision threshold `h`, in residual standard deviations. `None` disables alarms.
    pub threshold: Option<f64>,
    pub warmup: usize,
}

impl Default for CusumParams {
    fn default() -> Self {
        Self {
            drift: 0.5,
            threshold: Some(5.0),
            warmup: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CusumDetector {
    drift: f64,
    threshold: f64,
    warmup: usize,
    pos: f64,
    neg: f64,
    reference: Option<(f64, f64)>,
    pending: Vec<f64>,
}

impl CusumDetector {
    pub fn new(params: CusumParams) -> Result<Self> {
        let threshold = params.threshold.unwrap_or(f64::INFINITY);
        if !(params.drift >= 0.0 && params.drift.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "CUSUM drift must be >= 0, got {}",
                params.drift
            )));
        }
        if !(threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "CUSUM threshold must be > 0, got {threshold}"
            )));
        }
        if params.warmup < 30 {
            return Err(Error::InvalidParameter(format!(
                "CUSUM warm-up needs at least 30 points, got {}",
                params.warmup
            )));
        }
        Ok(Self {
            drift: params.drift,
            threshold,
            warmup: params.warmup,
            pos: 0.0,
            neg: 0.0,
            reference: None,
            pending: Vec::with_capacity(params.warmup),
        })
    }

    /// Starts monitoring immediately with known reference statistics.
    pub fn with_reference(params: CusumParams, mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bad CUSUM reference ({mean}, {std})"
            )));
        }
        let mut d = Self::new(params)?;
        d.reference = Some((mean, std));
        Ok(d)
    }

    pub fn sums(&self) -> (f64, f64) {
        (self.pos, self.neg)
    }

    pub fn reference(&self) -> Option<(f64, f64)> {
        self.reference
    }

    pub fn is_warming_up(&self) -> bool {
        self.reference.is_none()
    }

    /// Feeds one residual; returns `true` on alarm.
    pub fn update(&mut self, residual: f64) -> bool {
        let Some((mean, std)) = self.reference else {
            self.pending.push(residual);
            if self.pending.len() >= self.warmup {
                self.reference = reference_stats(&self.pending);
                self.pending.clear();
            }
            return false;
        };
        let z = (residual - mean) / std;
        self.pos = (self.pos + z - self.drift).max(0.0);
        self.neg = (self.neg - z - self.drift).max(0.0);
        if self.pos.max(self.neg) > self.threshold {
            self.pos = 0.0;
            self.neg = 0.0;
            self.reference = None;
            return true;
        }
        false
    }
}

/// Mean and sample std; `None` for a flat window, which keeps warming up.
fn reference_stats(window: &[f64]) -> Option<(f64, f64)> {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    (std > 0.0 && std.is_finite()).then_some((mean, std))
}
