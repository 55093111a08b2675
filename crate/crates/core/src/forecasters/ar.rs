use nalgebra::{DMatrix, DVector};

use super::Forecaster;
use crate::error::{Error, Result};
use crate::series::lag_embed;

/// `y_t = intercept + sum_i coefficients[i] * y_{t-1-i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub intercept: f64,
    /// `coefficients[0]` multiplies `y_{t-1}`.
    pub coefficients: Vec<f64>,
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn predict(&self, history: &[f64]) -> Result<f64> {
        let p = self.order();
        if history.len() < p {
            return Err(Error::WindowTooShort {
                needed: p,
                got: history.len(),
            });
        }
        Ok(self.intercept
            + self
                .coefficients
                .iter()
                .zip(history.iter().rev())
                .map(|(c, y)| c * y)
                .sum::<f64>())
    }

    /// `max |X^T (y - X beta)|` over the design `[1, y_{t-1}, ..., y_{t-p}]`
    /// of `window`; zero at an exact least-squares solution.
    pub fn normal_equation_residual(&self, window: &[f64]) -> Result<f64> {
        let p = self.order();
        let lagged = lag_embed(window, p)?;
        let mut grad = vec![0.0; p + 1];
        for row in &lagged.rows {
            let fitted = self.intercept
                + self
                    .coefficients
                    .iter()
                    .zip(row.features.iter().rev())
                    .map(|(c, x)| c * x)
                    .sum::<f64>();
            let r = row.target - fitted;
            grad[0] += r;
            for (g, x) in grad[1..].iter_mut().zip(row.features.iter().rev()) {
                *g += x * r;
            }
        }
        Ok(grad.into_iter().map(f64::abs).fold(0.0, f64::max))
    }
}

/// Least-squares AR(p) fit with intercept.
///
/// Lagged columns are centered and solved by SVD with a relative singular
/// value cutoff, giving the minimum-norm slope vector on rank-deficient
/// designs; the intercept is recovered from the means and is not penalized.
pub fn ar_fit(window: &[f64], order: usize) -> Result<ArModel> {
    if order == 0 {
        return Err(Error::InvalidParameter("AR order must be positive".into()));
    }
    if window.len() < order + 2 {
        return Err(Error::WindowTooShort {
            needed: order + 2,
            got: window.len(),
        });
    }
    let lagged = lag_embed(window, order)?;
    let m = lagged.len();

    // Column j holds y_{t-1-j}; features are stored oldest first.
    let mut x = DMatrix::<f64>::zeros(m, order);
    let mut y = DVector::<f64>::zeros(m);
    for (i, row) in lagged.rows.iter().enumerate() {
        for (j, v) in row.features.iter().rev().enumerate() {
            x[(i, j)] = *v;
        }
        y[i] = row.target;
    }
    let x_mean: Vec<f64> = (0..order).map(|j| x.column(j).mean()).collect();
    let y_mean = y.mean();
    for j in 0..order {
        x.column_mut(j).add_scalar_mut(-x_mean[j]);
    }
    y.add_scalar_mut(-y_mean);

    let svd = x.svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = s_max * (m.max(order) as f64) * f64::EPSILON;
    let beta = if s_max == 0.0 {
        DVector::zeros(order)
    } else {
        svd.solve(&y, tol)
            .map_err(|e| Error::Solve(e.to_string()))?
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Solve("non-finite coefficients".into()));
    }
    let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(ArModel {
        intercept,
        coefficients: beta.iter().copied().collect(),
    })
}

/// AR(p) refitted every `refit_every` predictions on the trailing `window`
/// values of the history.
#[derive(Debug, Clone)]
pub struct ArForecaster {
    order: usize,
    window: Option<usize>,
    refit_every: usize,
    model: Option<ArModel>,
    since_fit: usize,
    refits: usize,
}

impl ArForecaster {
    /// `window = None` fits on the whole training split and keeps that length
    /// for later refits.
    pub fn new(order: usize, window: Option<usize>, refit_every: usize) -> Result<Self> {
        if order == 0 || refit_every == 0 {
            return Err(Error::InvalidParameter(
                "AR order and refit_every must be positive".into(),
            ));
        }
        if let Some(w) = window {
            if w < order + 2 {
                return Err(Error::WindowTooShort {
                    needed: order + 2,
                    got: w,
                });
            }
        }
        Ok(Self {
            order,
            window,
            refit_every,
            model: None,
            since_fit: 0,
            refits: 0,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn model(&self) -> Option<&ArModel> {
        self.model.as_ref()
    }

    /// Number of fits so far, including the initial one.
    pub fn refits(&self) -> usize {
        self.refits
    }

    pub(crate) fn trailing<'a>(&self, history: &'a [f64]) -> &'a [f64] {
        let w = self.window.unwrap_or(history.len()).min(history.len());
        &history[history.len() - w..]
    }

    pub(crate) fn refit(&mut self, window: &[f64]) -> Result<()> {
        self.model = Some(ar_fit(window, self.order)?);
        self.since_fit = 0;
        self.refits += 1;
        Ok(())
    }

    pub(crate) fn refit_due(&self) -> bool {
        self.model.is_none() || self.since_fit >= self.refit_every
    }

    pub(crate) fn predict_with_current(&mut self, history: &[f64]) -> Result<f64> {
        let model = self.model.as_ref().expect("fitted before predicting");
        let y_hat = model.predict(history)?;
        self.since_fit += 1;
        Ok(y_hat)
    }

    pub(crate) fn reset(&mut self) {
        self.model = None;
        self.since_fit = 0;
    }
}

impl Forecaster for ArForecaster {
    fn name(&self) -> &str {
        "ar"
    }

    fn fit(&mut self, train: &[f64]) -> Result<()> {
        if self.window.is_none() {
            self.window = Some(train.len());
        }
        let w = self.trailing(train);
        self.refit(w)
    }

    fn predict_one(&mut self, history: &[f64]) -> Result<f64> {
        if self.refit_due() {
            let w = self.trailing(history);
            self.refit(w)?;
        }
        self.predict_with_current(history)
    }
}
