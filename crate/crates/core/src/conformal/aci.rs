use serde::{Deserialize, Serialize};

use super::scores::{empirical_quantile, ScoreBuffer};
use crate::error::{Error, Result};

/// Symmetric band `[center - half_width, center + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub half_width: f64,
    /// Coverage level `1 - alpha_t` actually used.
    pub effective_level: f64,
}

impl PredictionInterval {
    pub fn symmetric(center: f64, half_width: f64, effective_level: f64) -> Self {
        debug_assert!(half_width >= 0.0);
        let (lower, upper) = if half_width.is_infinite() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (center - half_width, center + half_width)
        };
        Self {
            lower,
            upper,
            center,
            half_width,
            effective_level,
        }
    }

    /// Endpoints count as covered.
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn is_infinite(&self) -> bool {
        self.half_width.is_infinite()
    }

    pub fn is_zero_width(&self) -> bool {
        self.half_width == 0.0
    }
}

/// Split-conformal band around `y_hat` at miscoverage `alpha`.
pub fn split_cp_interval(
    y_hat: f64,
    buffer: &ScoreBuffer,
    alpha: f64,
) -> Result<PredictionInterval> {
    let level = 1.0 - alpha;
    let q = empirical_quantile(buffer, level)?;
    Ok(PredictionInterval::symmetric(y_hat, q, level))
}

/// Online miscoverage tracker: `alpha_{t+1} = alpha_t + gamma * (alpha - miss_t)`.
///
/// `alpha_t` is never clamped; levels outside `[0, 1]` turn into zero-width or
/// unbounded bands through the quantile rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AciState {
    pub alpha_nominal: f64,
    pub alpha_t: f64,
    pub gamma: f64,
}

impl AciState {
    pub fn new(alpha_nominal: f64, gamma: f64) -> Result<Self> {
        Self::with_alpha(alpha_nominal, alpha_nominal, gamma)
    }

    pub fn with_alpha(alpha_nominal: f64, alpha_t: f64, gamma: f64) -> Result<Self> {
        if !(alpha_nominal > 0.0 && alpha_nominal < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in (0, 1), got {alpha_nominal}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        if !alpha_t.is_finite() {
            return Err(Error::NonFinite(format!("alpha_t = {alpha_t}")));
        }
        Ok(Self {
            alpha_nominal,
            alpha_t,
            gamma,
        })
    }

    pub fn level(&self) -> f64 {
        1.0 - self.alpha_t
    }

    /// Band at the current adaptive level `1 - alpha_t`.
    pub fn step(&self, buffer: &ScoreBuffer, y_hat: f64) -> Result<PredictionInterval> {
        let level = self.level();
        let q = empirical_quantile(buffer, level)?;
        Ok(PredictionInterval::symmetric(y_hat, q, level))
    }

    /// Applies one update after observing `y`.
    pub fn update(&self, y: f64, interval: &PredictionInterval) -> Self {
        self.update_with_miss(!interval.contains(y))
    }

    pub fn update_with_miss(&self, miss: bool) -> Self {
        let err = if miss { 1.0 } else { 0.0 };
        Self {
            alpha_t: self.alpha_t + self.gamma * (self.alpha_nominal - err),
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn one_to_nine() -> ScoreBuffer {
        ScoreBuffer::from_scores(9, (1..=9).map(f64::from)).unwrap()
    }

    #[test]
    fn split_examples() {
        let iv = split_cp_interval(0.0, &one_to_nine(), 0.1).unwrap();
        assert_eq!((iv.lower, iv.upper), (-9.0, 9.0));
        let zero = split_cp_interval(1.5, &one_to_nine(), 1.2).unwrap();
        assert_eq!((zero.lower, zero.upper), (1.5, 1.5));
        assert!(zero.is_zero_width());
    }

    #[test]
    fn aci_step_uses_adaptive_level() {
        let buf = one_to_nine();
        let s = AciState::new(0.1, 0.01).unwrap();
        assert_eq!(
            s.step(&buf, 0.3).unwrap(),
            split_cp_interval(0.3, &buf, 0.1).unwrap()
        );

        let low = AciState::with_alpha(0.1, -0.05, 0.01).unwrap();
        let iv = low.step(&buf, 0.0).unwrap();
        assert!(iv.is_infinite());
        assert_eq!((iv.lower, iv.upper), (f64::NEG_INFINITY, f64::INFINITY));

        let high = AciState::with_alpha(0.1, 1.2, 0.01).unwrap();
        assert!(high.step(&buf, 0.0).unwrap().is_zero_width());
    }

    #[test]
    fn update_examples() {
        let s = AciState::new(0.1, 0.01).unwrap();
        assert_abs_diff_eq!(s.update_with_miss(true).alpha_t, 0.091, epsilon = 1e-15);
        assert_abs_diff_eq!(s.update_with_miss(false).alpha_t, 0.101, epsilon = 1e-15);
        let frozen = AciState::new(0.1, 0.0).unwrap();
        let mut st = frozen;
        for i in 0..100 {
            st = st.update_with_miss(i % 3 == 0);
        }
        assert_eq!(st.alpha_t, 0.1);
    }

    #[test]
    fn boundary_counts_as_covered() {
        let iv = PredictionInterval::symmetric(1.0, 0.5, 0.9);
        assert!(iv.contains(0.5) && iv.contains(1.5));
        assert!(!iv.contains(1.5000001));
        let s = AciState::new(0.1, 0.01).unwrap();
        assert!(s.update(1.5, &iv).alpha_t > s.alpha_t);
    }

    #[test]
    fn invalid_parameters() {
        assert!(AciState::new(0.0, 0.01).is_err());
        assert!(AciState::new(1.0, 0.01).is_err());
        assert!(AciState::new(0.1, -0.01).is_err());
    }

    proptest! {
        #[test]
        fn telescoping_and_monotone(
            gamma in 1e-4f64..0.1,
            misses in proptest::collection::vec(any::<bool>(), 1..2000),
        ) {
            let mut s = AciState::new(0.1, gamma).unwrap();
            let alpha0 = s.alpha_t;
            let mut sum = 0.0;
            for &m in &misses {
                let next = s.update_with_miss(m);
                if m {
                    prop_assert!(next.alpha_t <= s.alpha_t);
                } else {
                    prop_assert!(next.alpha_t >= s.alpha_t);
                }
                sum += 0.1 - if m { 1.0 } else { 0.0 };
                s = next;
            }
            prop_assert!(((s.alpha_t - alpha0) / gamma - sum).abs() < 1e-9);
        }

        #[test]
        fn interval_symmetry(center in -1e3f64..1e3, hw in 0f64..1e3) {
            let iv = PredictionInterval::symmetric(center, hw, 0.9);
            prop_assert!(iv.lower <= iv.center && iv.center <= iv.upper);
            prop_assert!(((iv.upper - iv.center) - (iv.center - iv.lower)).abs() <= 1e-12 * center.abs().max(hw).max(1.0));
        }
    }
}
