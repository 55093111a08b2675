//! Aggregation of several ACI experts that differ only in learning rate.
//!
//! Each expert proposes a half-width from its own `alpha_t`. The band is the
//! weighted mean of those half-widths. With exponential weighting, weights are
//! multiplied by `exp(-eta * pinball(1 - alpha, s_t, q_k))` after each
//! observation and renormalized. If any weight then falls below
//! `weight_floor / K`, the vector is mixed with the uniform one.

use serde::{Deserialize, Serialize};

use super::aci::{AciState, PredictionInterval};
use super::scores::ScoreBuffer;
use crate::error::{Error, Result};

/// Quantile (pinball) loss of score `s` against predicted quantile `q`.
pub fn pinball_loss(tau: f64, s: f64, q: f64) -> f64 {
    if s >= q {
        tau * (s - q)
    } else {
        (1.0 - tau) * (q - s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Exponentially weighted average on pinball loss.
    #[default]
    Ewa,
    /// Uniform weights, never updated.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgAciParams {
    pub eta: f64,
    pub weight_floor: f64,
    pub aggregation: Aggregation,
    /// Infinite expert half-widths are replaced by `buffer max * inf_cap_factor`.
    pub inf_cap_factor: f64,
}

impl Default for AgAciParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            weight_floor: 1e-6,
            aggregation: Aggregation::Ewa,
            inf_cap_factor: 2.0,
        }
    }
}

impl AgAciParams {
    fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        if !(self.weight_floor > 0.0 && self.weight_floor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weight_floor must be in (0, 1), got {}",
                self.weight_floor
            )));
        }
        if !(self.inf_cap_factor >= 1.0 && self.inf_cap_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "inf_cap_factor must be finite and >= 1, got {}",
                self.inf_cap_factor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgAciState {
    pub experts: Vec<AciState>,
    pub weights: Vec<f64>,
    pub params: AgAciParams,
}

/// Output of [`AgAciState::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgAciStep {
    pub interval: PredictionInterval,
    /// Each expert's own (uncapped) band.
    pub expert_intervals: Vec<PredictionInterval>,
    /// Half-widths after capping infinite ones; these enter the average and the loss.
    pub capped_half_widths: Vec<f64>,
}

impl AgAciState {
    /// One expert per learning rate, uniform initial weights.
    pub fn new(alpha: f64, gammas: &[f64], params: AgAciParams) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidParameter(
                "AgACI needs at least one expert".into(),
            ));
        }
        params.validate()?;
        let experts = gammas
            .iter()
            .map(|&g| AciState::new(alpha, g))
            .collect::<Result<Vec<_>>>()?;
        let k = experts.len();
        Ok(Self {
            experts,
            weights: vec![1.0 / k as f64; k],
            params,
        })
    }

    pub fn from_parts(
        experts: Vec<AciState>,
        weights: Vec<f64>,
        params: AgAciParams,
    ) -> Result<Self> {
        params.validate()?;
        if experts.is_empty() || experts.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} experts with {} weights",
                experts.len(),
                weights.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "weights must be nonnegative and sum to 1, got {weights:?}"
            )));
        }
        Ok(Self {
            experts,
            weights,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn step(&self, buffer: &ScoreBuffer, y_hat: f64) -> Result<AgAciStep> {
        let sorted = buffer.sorted();
        let cap = sorted.max().ok_or(Error::EmptyBuffer)? * self.params.inf_cap_factor;

        let mut expert_intervals = Vec::with_capacity(self.experts.len());
        for e in &self.experts {
            let q = sorted.quantile(e.level())?;
            expert_intervals.push(PredictionInterval::symmetric(y_hat, q, e.level()));
        }
        let capped_half_widths: Vec<f64> = expert_intervals
            .iter()
            .map(|iv| if iv.is_infinite() { cap } else { iv.half_width })
            .collect();

        // A band is only unbounded when every expert's is.
        let half_width = if expert_intervals.iter().all(|iv| iv.is_infinite()) {
            f64::INFINITY
        } else {
            weighted_sum(&self.weights, &capped_half_widths)
        };
        let levels: Vec<f64> = self.experts.iter().map(|e| e.level()).collect();
        let level = weighted_sum(&self.weights, &levels);

        Ok(AgAciStep {
            interval: PredictionInterval::symmetric(y_hat, half_width, level),
            expert_intervals,
            capped_half_widths,
        })
    }

    /// Updates every expert against its own band, then reweights.
    pub fn update(&self, y: f64, y_hat: f64, step: &AgAciStep) -> Result<Self> {
        if step.expert_intervals.len() != self.experts.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} expert intervals, got {}",
                self.experts.len(),
                step.expert_intervals.len()
            )));
        }
        let experts: Vec<AciState> = self
            .experts
            .iter()
            .zip(&step.expert_intervals)
            .map(|(e, iv)| e.update(y, iv))
            .collect();

        let weights = match self.params.aggregation {
            Aggregation::Uniform => self.weights.clone(),
            Aggregation::Ewa => {
                let s = super::scores::residual_score(y, y_hat)?;
                let tau = 1.0 - self.experts[0].alpha_nominal;
                let losses: Vec<f64> = step
                    .capped_half_widths
                    .iter()
                    .map(|&q| pinball_loss(tau, s, q))
                    .collect();
                self.reweight(&losses)
            }
        };
        Ok(Self {
            experts,
            weights,
            params: self.params,
        })
    }

    fn reweight(&self, losses: &[f64]) -> Vec<f64> {
        let k = self.weights.len() as f64;
        let floor = self.params.weight_floor;
        let min_loss = losses.iter().copied().fold(f64::INFINITY, f64::min);
        // Shifting by the smallest loss keeps at least one factor at 1.
        let raw: Vec<f64> = self
            .weights
            .iter()
            .zip(losses)
            .map(|(w, l)| w * (-self.params.eta * (l - min_loss)).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        let normalized: Vec<f64> = raw.iter().map(|r| r / total).collect();
        if normalized.iter().all(|&w| w >= floor / k) {
            return normalized;
        }
        let mixed: Vec<f64> = normalized
            .iter()
            .map(|w| (1.0 - floor) * w + floor / k)
            .collect();
        let norm: f64 = mixed.iter().sum();
        mixed.into_iter().map(|w| w / norm).collect()
    }
}

/// Sum relative to the first value, so equal values come back unchanged.
fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    let base = values[0];
    base + weights
        .iter()
        .zip(values)
        .map(|(w, v)| w * (v - base))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn buffer(scores: &[f64]) -> ScoreBuffer {
        ScoreBuffer::from_scores(scores.len(), scores.iter().copied()).unwrap()
    }

    #[test]
    fn pinball_examples() {
        assert!((pinball_loss(0.9, 2.0, 1.0) - 0.9).abs() < 1e-15);
        assert_eq!(pinball_loss(0.9, 1.3, 1.3), 0.0);
        assert!((pinball_loss(0.9, 1.0, 2.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn singleton_matches_aci() {
        let buf = buffer(&[0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]);
        let ag = AgAciState::new(0.1, &[0.01], AgAciParams::default()).unwrap();
        let aci = AciState::new(0.1, 0.01).unwrap();
        assert_eq!(
            ag.step(&buf, 0.2).unwrap().interval,
            aci.step(&buf, 0.2).unwrap()
        );

        // Also when the lone expert is unbounded.
        let low = AciState::with_alpha(0.1, -0.2, 0.01).unwrap();
        let ag = AgAciState::from_parts(vec![low], vec![1.0], AgAciParams::default()).unwrap();
        assert_eq!(
            ag.step(&buf, 0.2).unwrap().interval,
            low.step(&buf, 0.2).unwrap()
        );
    }

    #[test]
    fn weighted_mean_half_width() {
        // Buffer 1..=9: level 1 - alpha picks rank ceil(10 * level).
        let buf = buffer(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let experts = vec![
            AciState::with_alpha(0.1, 0.9, 0.01).unwrap(), // level 0.1 -> k = 1 -> 1
            AciState::with_alpha(0.1, 0.8, 0.01).unwrap(), // level 0.2 -> k = 2 -> 2
            AciState::with_alpha(0.1, 0.6, 0.01).unwrap(), // level 0.4 -> k = 4 -> 4
        ];
        let ag =
            AgAciState::from_parts(experts, vec![0.5, 0.25, 0.25], AgAciParams::default()).unwrap();
        let step = ag.step(&buf, 0.0).unwrap();
        assert_eq!(step.capped_half_widths, vec![1.0, 2.0, 4.0]);
        assert!((step.interval.half_width - 2.0).abs() < 1e-15);
    }

    #[test]
    fn infinite_expert_is_capped() {
        let buf = buffer(&[1.0, 2.0, 3.0]);
        let experts = vec![
            AciState::with_alpha(0.1, -0.5, 0.01).unwrap(),
            AciState::with_alpha(0.1, 0.5, 0.01).unwrap(),
        ];
        let ag = AgAciState::from_parts(experts, vec![0.5, 0.5], AgAciParams::default()).unwrap();
        let step = ag.step(&buf, 0.0).unwrap();
        assert!(step.expert_intervals[0].is_infinite());
        assert_eq!(step.capped_half_widths[0], 6.0);
        assert!((step.interval.half_width - 0.5 * (6.0 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn identical_experts_stay_uniform() {
        let buf = buffer(&[0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0]);
        let mut ag = AgAciState::new(0.1, &[0.01, 0.01, 0.01], AgAciParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let y: f64 = rng.random_range(-2.0..2.0);
            let step = ag.step(&buf, 0.0).unwrap();
            let single = ag.experts[0].step(&buf, 0.0).unwrap();
            assert_eq!(step.interval.half_width, single.half_width);
            ag = ag.update(y, 0.0, &step).unwrap();
            for w in &ag.weights {
                assert!((w - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_eta_freezes_weights() {
        let buf = buffer(&[0.5, 1.0, 1.5, 2.0]);
        let params = AgAciParams {
            eta: 0.0,
            ..Default::default()
        };
        let start = AgAciState::from_parts(
            vec![
                AciState::new(0.1, 0.001).unwrap(),
                AciState::new(0.1, 0.05).unwrap(),
            ],
            vec![0.3, 0.7],
            params,
        )
        .unwrap();
        let mut ag = start.clone();
        for i in 0..200 {
            let y = if i % 4 == 0 { 5.0 } else { 0.1 };
            let step = ag.step(&buf, 0.0).unwrap();
            ag = ag.update(y, 0.0, &step).unwrap();
        }
        for (a, b) in ag.weights.iter().zip(&start.weights) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_loss_expert_gains_weight() {
        // Scores ~ |N(0,1)|; 0.9-quantile ~ 1.645. Expert 0 sits near it, expert 1 far above.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let buf = buffer(&(1..=99).map(|i| f64::from(i) * 0.05).collect::<Vec<_>>());
        let experts = vec![
            AciState::with_alpha(0.1, 1.0 - 0.33, 0.0).unwrap(), // rank 33 -> 1.65
            AciState::with_alpha(0.1, 0.1, 0.0).unwrap(),        // rank 90 -> 4.5
        ];
        let mut ag =
            AgAciState::from_parts(experts, vec![0.5, 0.5], AgAciParams::default()).unwrap();
        let mut cum = [0.0f64; 2];
        for _ in 0..500 {
            let y: f64 = normal.sample(&mut rng);
            let step = ag.step(&buf, 0.0).unwrap();
            for (c, q) in cum.iter_mut().zip(&step.capped_half_widths) {
                *c += pinball_loss(0.9, y.abs(), *q);
            }
            ag = ag.update(y, 0.0, &step).unwrap();
        }
        assert!(cum[0] < cum[1], "bookkeeping: {cum:?}");
        assert!(ag.weights[0] > ag.weights[1], "weights {:?}", ag.weights);
    }

    #[test]
    fn uniform_mode_ignores_losses() {
        let buf = buffer(&[0.5, 1.0, 1.5, 2.0]);
        let params = AgAciParams {
            aggregation: Aggregation::Uniform,
            ..Default::default()
        };
        let mut ag = AgAciState::new(0.1, &[1e-4, 1e-3, 1e-2], params).unwrap();
        for i in 0..100 {
            let step = ag.step(&buf, 0.0).unwrap();
            ag = ag
                .update(if i % 2 == 0 { 3.0 } else { 0.0 }, 0.0, &step)
                .unwrap();
        }
        assert!(ag.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(AgAciState::new(0.1, &[], AgAciParams::default()).is_err());
        let bad = AgAciParams {
            weight_floor: 0.0,
            ..Default::default()
        };
        assert!(AgAciState::new(0.1, &[0.01], bad).is_err());
    }

    proptest! {
        #[test]
        fn weights_stay_a_floored_simplex(
            ys in proptest::collection::vec(-4f64..4.0, 1..300),
            eta in 0f64..50.0,
        ) {
            let buf = buffer(&[0.1, 0.3, 0.5, 0.9, 1.4, 2.0, 2.2]);
            let params = AgAciParams { eta, ..Default::default() };
            let mut ag = AgAciState::new(0.1, &[1e-4, 1e-3, 1e-2, 0.2], params).unwrap();
            let floor = params.weight_floor / 4.0;
            for y in ys {
                let step = ag.step(&buf, 0.0).unwrap();
                ag = ag.update(y, 0.0, &step).unwrap();
                let sum: f64 = ag.weights.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                for &w in &ag.weights {
                    prop_assert!(w >= floor * (1.0 - 1e-12));
                }
            }
        }
    }
}
