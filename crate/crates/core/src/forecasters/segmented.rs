use super::ar::ArForecaster;
use super::cusum::{CusumDetector, CusumParams};
use super::{persistence_predict, Forecaster};
use crate::error::Result;

/// AR(p) fitted only on the segment since the last CUSUM alarm.
///
/// Residuals of its own forecasts drive the detector. An alarm moves the
/// segment start to the alarm point and forces a refit; segments shorter than
/// `p + 2` fall back to persistence.
#[derive(Debug, Clone)]
pub struct SegmentedAr {
    ar: ArForecaster,
    detector: CusumDetector,
    segment_start: usize,
    pending: Option<f64>,
    next_index: usize,
    change_points: Vec<usize>,
}

impl SegmentedAr {
    pub fn new(ar: ArForecaster, cusum: CusumParams) -> Result<Self> {
        Ok(Self {
            ar,
            detector: CusumDetector::new(cusum)?,
            segment_start: 0,
            pending: None,
            next_index: 0,
            change_points: Vec::new(),
        })
    }

    pub fn segment_start(&self) -> usize {
        self.segment_start
    }

    /// History positions at which alarms fired.
    pub fn change_points(&self) -> &[usize] {
        &self.change_points
    }
}

impl Forecaster for SegmentedAr {
    fn name(&self) -> &str {
        "segmented_ar"
    }

    fn fit(&mut self, train: &[f64]) -> Result<()> {
        self.segment_start = 0;
        self.next_index = train.len();
        self.ar.fit(train)
    }

    fn predict_one(&mut self, history: &[f64]) -> Result<f64> {
        let n = history.len();
        self.next_index = n;
        let start = self.segment_start.min(n);
        let segment = self.ar.trailing(&history[start..]);
        let y_hat = if segment.len() < self.ar.order() + 2 {
            self.ar.reset();
            persistence_predict(history)?
        } else {
            if self.ar.refit_due() {
                self.ar.refit(segment)?;
            }
            self.ar.predict_with_current(history)?
        };
        self.pending = Some(y_hat);
        Ok(y_hat)
    }

    fn observe(&mut self, y: f64) -> Result<()> {
        if let Some(y_hat) = self.pending.take() {
            if self.detector.update(y - y_hat) {
                self.segment_start = self.next_index;
                self.change_points.push(self.next_index);
                self.ar.reset();
            }
        }
        Ok(())
    }
}
