use serde::{Deserialize, Serialize};

/// One test step. Unscaled fields are in target units; `*_scaled` fields are
/// in the standardized units the calibrator works in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub index: i64,
    pub y: f64,
    pub y_hat: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub y_scaled: f64,
    pub y_hat_scaled: f64,
    pub lower_scaled: Option<f64>,
    pub upper_scaled: Option<f64>,
    /// Working miscoverage used for this step's band.
    pub alpha_t: Option<f64>,
    pub covered: Option<bool>,
}

impl ForecastRecord {
    pub fn width(&self) -> Option<f64> {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => Some(u - l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub n_test: usize,
    pub rmse: f64,
    /// Fraction of steps whose band contains `y`; absent without calibration.
    pub coverage: Option<f64>,
    /// Lower median of the finite band widths.
    pub median_width: Option<f64>,
    pub n_infinite: usize,
    pub n_zero_width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_final: Option<f64>,
}

/// RMSE, coverage and band-width statistics over the test records.
pub fn compute_metrics(records: &[ForecastRecord]) -> RunMetrics {
    let n = records.len();
    let mse = records.iter().map(|r| (r.y - r.y_hat).powi(2)).sum::<f64>() / n.max(1) as f64;

    let calibrated = records.iter().any(|r| r.covered.is_some());
    let coverage = calibrated
        .then(|| records.iter().filter(|r| r.covered == Some(true)).count() as f64 / n as f64);

    let widths: Vec<f64> = records.iter().filter_map(ForecastRecord::width).collect();
    let n_infinite = widths.iter().filter(|w| w.is_infinite()).count();
    let n_zero_width = widths.iter().filter(|&&w| w == 0.0).count();
    let mut finite: Vec<f64> = widths.into_iter().filter(|w| w.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let median_width = (!finite.is_empty()).then(|| finite[(finite.len() - 1) / 2]);

    RunMetrics {
        n_test: n,
        rmse: mse.sqrt(),
        coverage,
        median_width,
        n_infinite,
        n_zero_width,
        alpha_initial: records.first().and_then(|r| r.alpha_t),
        alpha_final: None,
    }
}
