//! JSON snapshot of a calibration stream, for resuming a service.
//!
//! ```json
//! {
//!   "method": "agaci",
//!   "alpha_nominal": 0.1,
//!   "experts": [{ "alpha_nominal": 0.1, "alpha_t": 0.093, "gamma": 0.01 }],
//!   "weights": [1.0],
//!   "params": { "eta": 1.0, "weight_floor": 1e-6, "aggregation": "ewa", "inf_cap_factor": 2.0 },
//!   "buffer": { "capacity": 600, "scores": [0.12, 0.4] }
//! }
//! ```
//!
//! `experts`/`weights` are empty for `none` and `split`; `params` is present
//! only for `agaci`.

use serde::{Deserialize, Serialize};

use super::{AciState, AgAciParams, AgAciState, Calibrator, Method, ScoreBuffer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSnapshot {
    pub method: Method,
    pub alpha_nominal: Option<f64>,
    #[serde(default)]
    pub experts: Vec<AciState>,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<AgAciParams>,
    pub buffer: ScoreBuffer,
}

impl CalibrationSnapshot {
    pub fn capture(calibrator: &Calibrator, buffer: &ScoreBuffer) -> Self {
        let (alpha_nominal, experts, weights, params) = match calibrator {
            Calibrator::None => (None, vec![], vec![], None),
            Calibrator::Split { alpha } => (Some(*alpha), vec![], vec![], None),
            Calibrator::Aci(s) => (Some(s.alpha_nominal), vec![*s], vec![1.0], None),
            Calibrator::Agaci(s) => (
                s.experts.first().map(|e| e.alpha_nominal),
                s.experts.clone(),
                s.weights.clone(),
                Some(s.params),
            ),
        };
        Self {
            method: calibrator.method(),
            alpha_nominal,
            experts,
            weights,
            params,
            buffer: buffer.clone(),
        }
    }

    pub fn restore(&self) -> Result<(Calibrator, ScoreBuffer)> {
        let buffer = ScoreBuffer::from_scores(self.buffer.capacity(), self.buffer.iter())?;
        let missing = |what: &str| {
            Error::InvalidParameter(format!("{} snapshot without {what}", self.method.as_str()))
        };
        let calibrator = match self.method {
            Method::None => Calibrator::None,
            Method::Split => Calibrator::Split {
                alpha: self.alpha_nominal.ok_or_else(|| missing("alpha_nominal"))?,
            },
            Method::Aci => {
                let e = self.experts.first().ok_or_else(|| missing("experts"))?;
                Calibrator::Aci(AciState::with_alpha(e.alpha_nominal, e.alpha_t, e.gamma)?)
            }
            Method::Agaci => {
                let experts = self
                    .experts
                    .iter()
                    .map(|e| AciState::with_alpha(e.alpha_nominal, e.alpha_t, e.gamma))
                    .collect::<Result<Vec<_>>>()?;
                let params = self.params.ok_or_else(|| missing("params"))?;
                Calibrator::Agaci(AgAciState::from_parts(
                    experts,
                    self.weights.clone(),
                    params,
                )?)
            }
        };
        Ok((calibrator, buffer))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
