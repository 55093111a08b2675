//! One-step point forecasters.
//!
//! A forecaster sees only the history strictly before the target time:
//! `predict_one(&values[..t])` returns the forecast of `values[t]`. After the
//! caller learns `values[t]` it may call `observe` so the model can adapt.

mod ar;
mod cusum;
mod replay;
mod segmented;

pub use ar::{ar_fit, ArForecaster, ArModel};
pub use cusum::{CusumDetector, CusumParams};
pub use replay::{ExternalForecastTrace, TraceRecord};
pub use segmented::SegmentedAr;

use crate::error::{Error, Result};

pub trait Forecaster: Send {
    fn name(&self) -> &str;

    fn fit(&mut self, train: &[f64]) -> Result<()>;

    fn predict_one(&mut self, history: &[f64]) -> Result<f64>;

    fn observe(&mut self, _y: f64) -> Result<()> {
        Ok(())
    }
}

/// Last observed value.
pub fn persistence_predict(history: &[f64]) -> Result<f64> {
    history
        .last()
        .copied()
        .ok_or(Error::WindowTooShort { needed: 1, got: 0 })
}

#[derive(Debug, Clone, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn name(&self) -> &str {
        "persistence"
    }

    fn fit(&mut self, _train: &[f64]) -> Result<()> {
        Ok(())
    }

    fn predict_one(&mut self, history: &[f64]) -> Result<f64> {
        persistence_predict(history)
    }
}
