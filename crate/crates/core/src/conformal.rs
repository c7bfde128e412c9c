//! Conformity scores, calibration, and interval construction.
//!
//! Every method scores a calibration point by how far its response falls
//! outside the black-box band, in method-specific units, and widens (or
//! shrinks) the band at prediction time by the calibrated quantile of those
//! scores measured in the same units:
//!
//! | method | score | interval |
//! |--------|-------|----------|
//! | CQR    | `max(lo − y, y − hi)` | `[lo − Q, hi + Q]` |
//! | CQR-m  | `max((lo − y)/(m − lo + ε), (y − hi)/(hi − m + ε))` | `[lo − Q(m − lo + ε), hi + Q(hi − m + ε)]` |
//! | CQR-r  | `max(lo − y, y − hi)/(hi − lo + ε)` | `[lo − Q(hi − lo + ε), hi + Q(hi − lo + ε)]` |

use std::sync::Arc;

use crate::domain::{check_alpha, empirical_conformal_quantile, Dataset, Interval, MethodTag};
use crate::error::{Error, Result};
use crate::regressors::{FittedQuantileModel, QuantilePrediction};

/// Denominator guard for CQR-m and CQR-r, in response units.
pub const DEFAULT_EPS: f64 = 1e-6;

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("conformity score input"))
    }
}

pub fn score_cqr(y: f64, lo: f64, hi: f64) -> Result<f64> {
    finite(&[y, lo, hi])?;
    Ok((lo - y).max(y - hi))
}

pub fn score_cqr_m(y: f64, lo: f64, mid: f64, hi: f64, eps: f64) -> Result<f64> {
    finite(&[y, lo, mid, hi, eps])?;
    Ok(((lo - y) / (mid - lo + eps)).max((y - hi) / (hi - mid + eps)))
}

pub fn score_cqr_r(y: f64, lo: f64, hi: f64, eps: f64) -> Result<f64> {
    finite(&[y, lo, hi, eps])?;
    Ok((lo - y).max(y - hi) / (hi - lo + eps))
}

/// Score of `y` under `method` given repaired black-box predictions.
pub fn score(method: MethodTag, y: f64, p: &QuantilePrediction, eps: f64) -> Result<f64> {
    match method {
        MethodTag::Cqr => score_cqr(y, p.lo, p.hi),
        MethodTag::CqrM => score_cqr_m(y, p.lo, p.median.ok_or(Error::MissingMedian)?, p.hi, eps),
        MethodTag::CqrR => score_cqr_r(y, p.lo, p.hi, eps),
    }
}

/// Conformalized band around `p` for threshold `threshold`.
///
/// `+∞` yields `(−∞, +∞)`. A negative threshold can push the endpoints past
/// each other; the interval then collapses to their midpoint.
pub fn interval(
    method: MethodTag,
    p: &QuantilePrediction,
    threshold: f64,
    eps: f64,
) -> Result<Interval> {
    if threshold == f64::INFINITY {
        return Ok(Interval::unbounded());
    }
    if !threshold.is_finite() {
        return Err(Error::NonFinite("threshold"));
    }
    let (lo, hi) = match method {
        MethodTag::Cqr => (p.lo - threshold, p.hi + threshold),
        MethodTag::CqrM => {
            let mid = p.median.ok_or(Error::MissingMedian)?;
            (
                p.lo - threshold * (mid - p.lo + eps),
                p.hi + threshold * (p.hi - mid + eps),
            )
        }
        MethodTag::CqrR => {
            let delta = threshold * (p.hi - p.lo + eps);
            (p.lo - delta, p.hi + delta)
        }
    };
    if lo > hi {
        let mid = lo + (hi - lo) / 2.0;
        Interval::new(mid, mid)
    } else {
        Interval::new(lo, hi)
    }
}

/// Calibration threshold from precomputed predictions on a calibration set.
pub fn calibrate_threshold(
    method: MethodTag,
    predictions: &[QuantilePrediction],
    responses: &[f64],
    alpha: f64,
    eps: f64,
) -> Result<f64> {
    if predictions.len() != responses.len() {
        return Err(Error::InvalidConfig(format!(
            "{} predictions for {} responses",
            predictions.len(),
            responses.len()
        )));
    }
    let scores = predictions
        .iter()
        .zip(responses)
        .map(|(p, &y)| score(method, y, p, eps))
        .collect::<Result<Vec<_>>>()?;
    empirical_conformal_quantile(&scores, alpha)
}

/// A fitted quantile model plus its calibrated threshold.
#[derive(Debug, Clone)]
pub struct ConformalPredictor {
    method: MethodTag,
    model: Arc<FittedQuantileModel>,
    threshold: f64,
    alpha: f64,
    eps: f64,
}

impl ConformalPredictor {
    /// Assembles a predictor from an already computed threshold.
    pub fn from_parts(
        method: MethodTag,
        model: Arc<FittedQuantileModel>,
        threshold: f64,
        alpha: f64,
        eps: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if method.needs_median() && !model.levels().has_median() {
            return Err(Error::MissingMedian);
        }
        if threshold.is_nan() || threshold == f64::NEG_INFINITY {
            return Err(Error::NonFinite("threshold"));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must be finite and non-negative, got {eps}"
            )));
        }
        Ok(Self {
            method,
            model,
            threshold,
            alpha,
            eps,
        })
    }

    pub fn method(&self) -> MethodTag {
        self.method
    }

    pub fn model(&self) -> &FittedQuantileModel {
        &self.model
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn predict_interval(&self, x: &[f64]) -> Result<Interval> {
        let p = self.model.predict(x)?;
        interval(self.method, &p, self.threshold, self.eps)
    }

    /// Score of `(x, y)` under this predictor's method and eps.
    pub fn score(&self, x: &[f64], y: f64) -> Result<f64> {
        let p = self.model.predict(x)?;
        score(self.method, y, &p, self.eps)
    }
}

/// Scores `calib` under `method` and sets the threshold to the conformal
/// `(1 − α)` empirical quantile of the scores.
pub fn calibrate(
    method: MethodTag,
    model: impl Into<Arc<FittedQuantileModel>>,
    calib: &Dataset,
    alpha: f64,
    eps: f64,
) -> Result<ConformalPredictor> {
    check_alpha(alpha)?;
    let model = model.into();
    if method.needs_median() && !model.levels().has_median() {
        return Err(Error::MissingMedian);
    }
    if calib.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let predictions = calib
        .samples()
        .iter()
        .map(|s| model.predict(s.x()))
        .collect::<Result<Vec<_>>>()?;
    let responses: Vec<f64> = calib.responses().collect();
    let threshold = calibrate_threshold(method, &predictions, &responses, alpha, eps)?;
    ConformalPredictor::from_parts(method, model, threshold, alpha, eps)
}
