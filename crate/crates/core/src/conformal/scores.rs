use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute residual `|y - y_hat|`.
pub fn residual_score(y: f64, y_hat: f64) -> Result<f64> {
    if !y.is_finite() || !y_hat.is_finite() {
        return Err(Error::NonFinite(format!("residual_score({y}, {y_hat})")));
    }
    Ok((y - y_hat).abs())
}

/// Bounded FIFO of nonconformity scores in observation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBuffer {
    capacity: usize,
    scores: VecDeque<f64>,
}

impl ScoreBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter(
                "buffer capacity must be positive".into(),
            ));
        }
        Ok(Self {
            capacity,
            scores: VecDeque::with_capacity(capacity),
        })
    }

    pub fn from_scores(capacity: usize, scores: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut buf = Self::new(capacity)?;
        for s in scores {
            buf.push(s)?;
        }
        Ok(buf)
    }

    /// Appends a score, evicting the oldest one when full.
    pub fn push(&mut self, score: f64) -> Result<()> {
        if !(score.is_finite() && score >= 0.0) {
            return Err(Error::NonFinite(format!(
                "scores must be finite and nonnegative, got {score}"
            )));
        }
        if self.scores.len() == self.capacity {
            self.scores.pop_front();
        }
        self.scores.push_back(score);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.scores.iter().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.scores.iter().copied().reduce(f64::max)
    }

    /// Sorted copy of the scores, for computing several quantiles at once.
    pub fn sorted(&self) -> SortedScores {
        let mut v: Vec<f64> = self.scores.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        SortedScores(v)
    }
}

/// Ascending snapshot of a [`ScoreBuffer`].
#[derive(Debug, Clone, PartialEq)]
pub struct SortedScores(Vec<f64>);

impl SortedScores {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<f64> {
        self.0.last().copied()
    }

    pub fn quantile(&self, level: f64) -> Result<f64> {
        let n = self.0.len();
        match order_statistic_rank(n, level)? {
            Rank::Zero => Ok(0.0),
            Rank::Infinite => Ok(f64::INFINITY),
            Rank::At(k) => Ok(self.0[k - 1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    /// `k <= 0`: zero-width band.
    Zero,
    /// `k > n`: unbounded band.
    Infinite,
    /// 1-based order statistic.
    At(usize),
}

/// Finite-sample corrected rank `k = ceil((n + 1) * level)`.
///
/// A relative slack of 1e-9 absorbs rounding in `(n + 1) * level`, so that
/// `level = k / (n + 1)` maps back to `k`.
pub fn order_statistic_rank(n: usize, level: f64) -> Result<Rank> {
    if n == 0 {
        return Err(Error::EmptyBuffer);
    }
    if level.is_nan() {
        return Err(Error::InvalidParameter("quantile level is NaN".into()));
    }
    let x = (n + 1) as f64 * level;
    let k = (x - 1e-9 * x.abs().max(1.0)).ceil();
    Ok(if k <= 0.0 {
        Rank::Zero
    } else if k > n as f64 {
        Rank::Infinite
    } else {
        Rank::At(k as usize)
    })
}

/// Empirical `level`-quantile of the buffer with the `(n + 1)` correction.
/// Returns 0 when the rank falls below 1 and `+inf` when it exceeds `n`.
pub fn empirical_quantile(buffer: &ScoreBuffer, level: f64) -> Result<f64> {
    match order_statistic_rank(buffer.len(), level)? {
        Rank::Zero => Ok(0.0),
        Rank::Infinite => Ok(f64::INFINITY),
        Rank::At(k) => {
            let mut v: Vec<f64> = buffer.iter().collect();
            let (_, kth, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
            Ok(*kth)
        }
    }
}
