//! Residual-based conformal calibration: split CP, ACI and AgACI.

mod aci;
mod agaci;
mod scores;
mod snapshot;

pub use aci::{split_cp_interval, AciState, PredictionInterval};
pub use agaci::{pinball_loss, AgAciParams, AgAciState, AgAciStep, Aggregation};
pub use scores::{
    empirical_quantile, order_statistic_rank, residual_score, Rank, ScoreBuffer, SortedScores,
};
pub use snapshot::CalibrationSnapshot;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    Split,
    Aci,
    Agaci,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Split => "split",
            Method::Aci => "aci",
            Method::Agaci => "agaci",
        }
    }
}

/// Band produced for one step, plus what the update needs to see again.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedStep {
    pub interval: PredictionInterval,
    agaci: Option<AgAciStep>,
}

/// A per-stream calibration state machine. Steps must be applied in
/// observation order: `interval` then `update`.
#[derive(Debug, Clone, PartialEq)]
pub enum Calibrator {
    None,
    Split { alpha: f64 },
    Aci(AciState),
    Agaci(AgAciState),
}

impl Calibrator {
    pub fn method(&self) -> Method {
        match self {
            Calibrator::None => Method::None,
            Calibrator::Split { .. } => Method::Split,
            Calibrator::Aci(_) => Method::Aci,
            Calibrator::Agaci(_) => Method::Agaci,
        }
    }

    /// `None` for the uncalibrated ablation.
    pub fn interval(&self, buffer: &ScoreBuffer, y_hat: f64) -> Result<Option<CalibratedStep>> {
        Ok(match self {
            Calibrator::None => None,
            Calibrator::Split { alpha } => Some(CalibratedStep {
                interval: split_cp_interval(y_hat, buffer, *alpha)?,
                agaci: None,
            }),
            Calibrator::Aci(state) => Some(CalibratedStep {
                interval: state.step(buffer, y_hat)?,
                agaci: None,
            }),
            Calibrator::Agaci(state) => {
                let step = state.step(buffer, y_hat)?;
                Some(CalibratedStep {
                    interval: step.interval,
                    agaci: Some(step),
                })
            }
        })
    }

    pub fn update(&mut self, y: f64, y_hat: f64, step: &CalibratedStep) -> Result<()> {
        match self {
            Calibrator::None | Calibrator::Split { .. } => {}
            Calibrator::Aci(state) => *state = state.update(y, &step.interval),
            Calibrator::Agaci(state) => {
                let inner = step
                    .agaci
                    .as_ref()
                    .expect("AgACI step carries expert bands");
                *state = state.update(y, y_hat, inner)?;
            }
        }
        Ok(())
    }

    /// Working miscoverage: `alpha_t` for ACI, the weighted level's complement
    /// for AgACI, the fixed alpha for split CP.
    pub fn alpha_t(&self) -> Option<f64> {
        match self {
            Calibrator::None => None,
            Calibrator::Split { alpha } => Some(*alpha),
            Calibrator::Aci(s) => Some(s.alpha_t),
            Calibrator::Agaci(s) => Some(
                s.experts
                    .iter()
                    .zip(&s.weights)
                    .map(|(e, w)| w * e.alpha_t)
                    .sum(),
            ),
        }
    }
}
