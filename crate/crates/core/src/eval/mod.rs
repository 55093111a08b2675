//! One-step rolling evaluation.
//!
//! A run standardizes the series with statistics from the training split,
//! fits the forecaster on the scaled training data, seeds the score buffer
//! with residuals over the calibration window, then walks the test window:
//! forecast, band, observe, update. Reported values are in target units.

mod grid;
mod metrics;

pub use grid::{grid_run, CellFailure, ComparisonTable, GridCell, MetricsRecord, RunStatus};
pub use metrics::{compute_metrics, ForecastRecord, RunMetrics};

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conformal::{
    residual_score, AciState, AgAciParams, AgAciState, Calibrator, Method, ScoreBuffer,
};
use crate::datagen::GeneratorSpec;
use crate::error::{Error, Result};
use crate::forecasters::{
    ArForecaster, CusumParams, ExternalForecastTrace, Forecaster, Persistence, SegmentedAr,
    TraceRecord,
};
use crate::io;
use crate::series::{default_lag, Frequency, SplitSpec, StandardScaler, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Series CSV; relative paths resolve against the config's base directory.
    Csv(PathBuf),
    Generate(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    pub name: String,
    pub source: DatasetSource,
    #[serde(default)]
    pub frequency: Frequency,
}

impl DatasetRef {
    /// Loads the series. `seed` overrides the generator seed for generated data.
    pub fn load(&self, base_dir: &Path, seed: Option<u64>) -> Result<TimeSeries> {
        match &self.source {
            DatasetSource::Csv(path) => io::read_series_csv(&base_dir.join(path)),
            DatasetSource::Generate(spec) => {
                let spec = match seed {
                    Some(s) => spec.clone().with_seed(s),
                    None => spec.clone(),
                };
                Ok(spec.generate()?.series)
            }
        }
    }
}

fn default_refit_every() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForecasterConfig {
    Persistence,
    Ar {
        /// Defaults to the lag length, capped at a quarter of the fitting window.
        #[serde(default)]
        order: Option<usize>,
        /// Trailing fitting window; defaults to the training split length.
        #[serde(default)]
        window: Option<usize>,
        #[serde(default = "default_refit_every")]
        refit_every: usize,
    },
    SegmentedAr {
        #[serde(default)]
        order: Option<usize>,
        #[serde(default)]
        window: Option<usize>,
        #[serde(default = "default_refit_every")]
        refit_every: usize,
        #[serde(default)]
        cusum: CusumParams,
    },
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        ForecasterConfig::Ar {
            order: None,
            window: None,
            refit_every: default_refit_every(),
        }
    }
}

impl ForecasterConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ForecasterConfig::Persistence => "persistence",
            ForecasterConfig::Ar { .. } => "ar",
            ForecasterConfig::SegmentedAr { .. } => "segmented_ar",
        }
    }

    pub fn build(&self, lag: usize, train_len: usize) -> Result<Box<dyn Forecaster>> {
        let resolve = |order: Option<usize>, window: Option<usize>| {
            let w = window.unwrap_or(train_len);
            let p = order.unwrap_or_else(|| lag.min(w / 4)).max(1);
            (p, w)
        };
        Ok(match self {
            ForecasterConfig::Persistence => Box::new(Persistence),
            ForecasterConfig::Ar {
                order,
                window,
                refit_every,
            } => {
                let (p, w) = resolve(*order, *window);
                Box::new(ArForecaster::new(p, Some(w), *refit_every)?)
            }
            ForecasterConfig::SegmentedAr {
                order,
                window,
                refit_every,
                cusum,
            } => {
                let (p, w) = resolve(*order, *window);
                Box::new(SegmentedAr::new(
                    ArForecaster::new(p, Some(w), *refit_every)?,
                    *cusum,
                )?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferMode {
    /// Calibration scores only.
    Frozen,
    /// Test-time scores are appended and the oldest evicted.
    #[default]
    Rolling,
}

fn default_method() -> Method {
    Method::Aci
}
fn default_alpha() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.01
}
fn default_gamma_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}
fn default_split() -> [f64; 3] {
    [0.5, 0.2, 0.3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetRef,
    #[serde(default)]
    pub forecaster: ForecasterConfig,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Learning rate for `aci`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Expert learning rates for `agaci`.
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: Vec<f64>,
    #[serde(default)]
    pub agaci: AgAciParams,
    /// Lag length; defaults by dataset frequency.
    #[serde(default)]
    pub lag: Option<usize>,
    /// Train / calibration / test fractions.
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    /// Overrides the generator seed of generated datasets.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub buffer_mode: BufferMode,
}

impl RunConfig {
    pub fn new(dataset: DatasetRef, forecaster: ForecasterConfig, method: Method) -> Self {
        Self {
            dataset,
            forecaster,
            method,
            alpha: default_alpha(),
            gamma: default_gamma(),
            gamma_grid: default_gamma_grid(),
            agaci: AgAciParams::default(),
            lag: None,
            split: default_split(),
            seed: None,
            buffer_mode: BufferMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.method == Method::Agaci && self.gamma_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "gamma_grid must be nonempty for agaci".into(),
            ));
        }
        if self.lag == Some(0) {
            return Err(Error::InvalidParameter("lag must be positive".into()));
        }
        SplitSpec::from_fractions(1_000_000, self.split)?;
        Ok(())
    }

    pub fn lag(&self) -> usize {
        self.lag
            .unwrap_or_else(|| default_lag(self.dataset.frequency))
    }

    pub fn key(&self, forecaster: &str) -> RunKey {
        RunKey {
            dataset: self.dataset.name.clone(),
            forecaster: forecaster.to_string(),
            method: self.method,
        }
    }

    pub fn calibrator(&self) -> Result<Calibrator> {
        Ok(match self.method {
            Method::None => Calibrator::None,
            Method::Split => Calibrator::Split { alpha: self.alpha },
            Method::Aci => Calibrator::Aci(AciState::new(self.alpha, self.gamma)?),
            Method::Agaci => {
                Calibrator::Agaci(AgAciState::new(self.alpha, &self.gamma_grid, self.agaci)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub dataset: String,
    pub forecaster: String,
    pub method: Method,
}

impl RunKey {
    /// Column label in comparison tables.
    pub fn column(&self) -> String {
        format!("{}+{}", self.forecaster, self.method.as_str())
    }

    fn sort_tuple(&self) -> (&str, &str, &str) {
        (&self.dataset, &self.forecaster, self.method.as_str())
    }
}

impl Ord for RunKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_tuple().cmp(&other.sort_tuple())
    }
}

impl PartialOrd for RunKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            self.dataset,
            self.forecaster,
            self.method.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub key: RunKey,
    pub alpha: f64,
    pub method_gamma: Option<f64>,
    pub split: SplitSpec,
    pub scaler: StandardScaler,
    pub metrics: RunMetrics,
    pub records: Vec<ForecastRecord>,
    /// Point forecasts over calibration and test windows, in trace format.
    pub trace: Vec<TraceRecord>,
}

impl RunReport {
    /// `(alpha_T - alpha_0) / gamma - sum_t (alpha - err_t)`; zero up to
    /// rounding for an ACI run.
    pub fn telescoping_gap(&self) -> Option<f64> {
        let gamma = self.method_gamma.filter(|g| *g > 0.0)?;
        let (a0, at) = (self.metrics.alpha_initial?, self.metrics.alpha_final?);
        let sum: f64 = self
            .records
            .iter()
            .filter_map(|r| r.covered)
            .map(|covered| self.alpha - if covered { 0.0 } else { 1.0 })
            .sum();
        Some((at - a0) / gamma - sum)
    }

    pub fn trace(&self) -> Result<ExternalForecastTrace> {
        ExternalForecastTrace::new(self.trace.clone())
    }

    /// Bands CSV: `index,y,y_hat,lower,upper,alpha_t,covered`.
    pub fn bands_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("index,y,y_hat,lower,upper,alpha_t,covered\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.index,
                r.y,
                r.y_hat,
                opt(r.lower),
                opt(r.upper),
                opt(r.alpha_t),
                r.covered
                    .map(|c| if c { "1" } else { "0" })
                    .unwrap_or_default(),
            ));
        }
        out
    }
}

/// Where point forecasts come from.
pub enum PointSource<'a> {
    Model(Box<dyn Forecaster>),
    Replay(&'a ExternalForecastTrace),
}

/// Loads the dataset and runs the configured forecaster.
pub fn run_rolling(config: &RunConfig, base_dir: &Path) -> Result<RunReport> {
    let series = config
        .dataset
        .load(base_dir, config.seed)
        .map_err(|e| e.in_stage("dataset"))?;
    run_on_series(config, &series)
}

pub fn run_on_series(config: &RunConfig, series: &TimeSeries) -> Result<RunReport> {
    config.validate()?;
    let split =
        SplitSpec::from_fractions(series.len(), config.split).map_err(|e| e.in_stage("split"))?;
    let forecaster = config
        .forecaster
        .build(config.lag(), split.train_end)
        .map_err(|e| e.in_stage("forecaster"))?;
    let name = forecaster.name().to_string();
    run_with_source(config, series, PointSource::Model(forecaster), &name)
}

/// Conformalizes forecasts replayed from an external trace.
pub fn run_replay(
    config: &RunConfig,
    series: &TimeSeries,
    trace: &ExternalForecastTrace,
) -> Result<RunReport> {
    config.validate()?;
    run_with_source(config, series, PointSource::Replay(trace), "replay")
}

pub fn run_with_source(
    config: &RunConfig,
    series: &TimeSeries,
    mut source: PointSource<'_>,
    forecaster_name: &str,
) -> Result<RunReport> {
    let split =
        SplitSpec::from_fractions(series.len(), config.split).map_err(|e| e.in_stage("split"))?;
    let scaler = StandardScaler::fit(series, split.train()).map_err(|e| e.in_stage("scaler"))?;
    let raw = series.values();
    let scaled = scaler.transform_all(raw);

    match &mut source {
        PointSource::Model(f) => f
            .fit(&scaled[..split.train_end])
            .map_err(|e| e.in_stage("forecaster fit"))?,
        PointSource::Replay(trace) => {
            let covered = series.index_at(split.train_end)..series.index_at(split.test_end);
            trace
                .check_covers(covered)
                .map_err(|e| e.in_stage("trace"))?;
            trace
                .check_alignment(series)
                .map_err(|e| e.in_stage("trace"))?;
        }
    }

    // Forecast in target units, re-standardized: both sources share this path.
    let forecast = |source: &mut PointSource<'_>, t: usize| -> Result<(f64, f64)> {
        let y_hat = match source {
            PointSource::Model(f) => scaler.inverse_transform(f.predict_one(&scaled[..t])?),
            PointSource::Replay(trace) => trace.replay_predict(series.index_at(t), series)?,
        };
        if !y_hat.is_finite() {
            return Err(Error::NonFinite(format!(
                "forecast at index {}",
                series.index_at(t)
            )));
        }
        Ok((y_hat, scaler.transform(y_hat)))
    };
    let observe = |source: &mut PointSource<'_>, y: f64| -> Result<()> {
        match source {
            PointSource::Model(f) => f.observe(y),
            PointSource::Replay(_) => Ok(()),
        }
    };

    let mut trace = Vec::with_capacity(split.test_end - split.train_end);
    let cal_len = split.cal_end - split.train_end;
    let mut buffer = ScoreBuffer::new(cal_len.max(1))?;
    for t in split.calibration() {
        let (y_hat, y_hat_scaled) =
            forecast(&mut source, t).map_err(|e| e.in_stage("calibration"))?;
        buffer
            .push(residual_score(scaled[t], y_hat_scaled)?)
            .map_err(|e| e.in_stage("calibration"))?;
        trace.push(TraceRecord {
            index: series.index_at(t),
            y_true: raw[t],
            y_hat,
        });
        observe(&mut source, scaled[t]).map_err(|e| e.in_stage("calibration"))?;
    }

    let mut calibrator = config.calibrator()?;
    let alpha_initial = calibrator.alpha_t();
    let mut records = Vec::with_capacity(split.test_end - split.cal_end);
    for t in split.test() {
        let (y_hat, y_hat_scaled) = forecast(&mut source, t).map_err(|e| e.in_stage("test"))?;
        let (y, y_scaled) = (raw[t], scaled[t]);
        let alpha_t = calibrator.alpha_t();
        let step = calibrator
            .interval(&buffer, y_hat_scaled)
            .map_err(|e| e.in_stage("test"))?;

        let mut record = ForecastRecord {
            index: series.index_at(t),
            y,
            y_hat,
            lower: None,
            upper: None,
            y_scaled,
            y_hat_scaled,
            lower_scaled: None,
            upper_scaled: None,
            alpha_t,
            covered: None,
        };
        if let Some(step) = &step {
            let iv = step.interval;
            let half = if iv.is_infinite() {
                f64::INFINITY
            } else {
                scaler.inverse_scale(iv.half_width)
            };
            record.lower_scaled = Some(iv.lower);
            record.upper_scaled = Some(iv.upper);
            record.lower = Some(if half.is_infinite() {
                f64::NEG_INFINITY
            } else {
                y_hat - half
            });
            record.upper = Some(if half.is_infinite() {
                f64::INFINITY
            } else {
                y_hat + half
            });
            record.covered = Some(iv.contains(y_scaled));
            calibrator
                .update(y_scaled, y_hat_scaled, step)
                .map_err(|e| e.in_stage("test"))?;
        }
        records.push(record);
        trace.push(TraceRecord {
            index: record.index,
            y_true: y,
            y_hat,
        });

        if config.buffer_mode == BufferMode::Rolling {
            buffer
                .push(residual_score(y_scaled, y_hat_scaled)?)
                .map_err(|e| e.in_stage("test"))?;
        }
        observe(&mut source, y_scaled).map_err(|e| e.in_stage("test"))?;
    }

    let mut metrics = compute_metrics(&records);
    metrics.alpha_initial = alpha_initial;
    metrics.alpha_final = calibrator.alpha_t();
    Ok(RunReport {
        key: config.key(forecaster_name),
        alpha: config.alpha,
        method_gamma: (config.method == Method::Aci).then_some(config.gamma),
        split,
        scaler,
        metrics,
        records,
        trace,
    })
}
