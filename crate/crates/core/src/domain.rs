//! Domain types shared by every module, plus the conformal empirical quantile.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
    y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::NonFinite("response"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// An ordered collection of samples sharing the feature dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    d: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig(
                "feature dimension must be positive".into(),
            ));
        }
        if let Some(bad) = samples.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.dim(),
            });
        }
        Ok(Self { samples, d })
    }

    /// Builds a dataset from parallel feature rows and responses.
    pub fn from_rows(rows: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if rows.len() != ys.len() {
            return Err(Error::InvalidConfig(format!(
                "{} feature rows but {} responses",
                rows.len(),
                ys.len()
            )));
        }
        let d = rows.first().map_or(1, Vec::len);
        let samples = rows
            .into_iter()
            .zip(ys)
            .map(|(x, y)| Sample::new(x, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, d)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn responses(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(Sample::y)
    }

    /// The samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            d: self.d,
        }
    }

    /// Same features, responses transformed by `f`.
    pub fn map_responses(&self, f: impl Fn(f64) -> f64) -> Result<Dataset> {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample::new(s.x.clone(), f(s.y)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { samples, d: self.d })
    }

    pub(crate) fn ensure_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyDataset)
        } else {
            Ok(())
        }
    }
}

/// Quantile levels a black-box regressor is asked to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileLevels {
    alpha_lo: f64,
    alpha_up: f64,
    median: bool,
}

impl QuantileLevels {
    pub const MEDIAN: f64 = 0.5;

    pub fn new(alpha_lo: f64, alpha_up: f64, median: bool) -> Result<Self> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(alpha_lo) || !in_unit(alpha_up) {
            return Err(Error::InvalidLevels(format!(
                "levels ({alpha_lo}, {alpha_up}) must lie in (0, 1)"
            )));
        }
        if alpha_lo >= alpha_up {
            return Err(Error::InvalidLevels(format!(
                "lower level {alpha_lo} must be below upper level {alpha_up}"
            )));
        }
        if median && !(alpha_lo < Self::MEDIAN && Self::MEDIAN < alpha_up) {
            return Err(Error::InvalidLevels(format!(
                "median requires {alpha_lo} < 0.5 < {alpha_up}"
            )));
        }
        Ok(Self {
            alpha_lo,
            alpha_up,
            median,
        })
    }

    /// Equal-tailed levels `(α/2, 1 − α/2)`.
    pub fn symmetric(alpha: f64, median: bool) -> Result<Self> {
        check_alpha(alpha)?;
        Self::new(alpha / 2.0, 1.0 - alpha / 2.0, median)
    }

    pub fn alpha_lo(&self) -> f64 {
        self.alpha_lo
    }

    pub fn alpha_up(&self) -> f64 {
        self.alpha_up
    }

    pub fn median(&self) -> Option<f64> {
        self.median.then_some(Self::MEDIAN)
    }

    pub fn has_median(&self) -> bool {
        self.median
    }

    pub fn with_median(self, median: bool) -> Result<Self> {
        Self::new(self.alpha_lo, self.alpha_up, median)
    }
}

/// A closed prediction interval. `(−∞, +∞)` marks a calibration set too
/// small for the requested level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::NonFinite("interval endpoint"));
        }
        if lo > hi {
            return Err(Error::InvalidConfig(format!(
                "interval lower endpoint {lo} exceeds upper {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Conformalization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodTag {
    #[serde(rename = "CQR")]
    Cqr,
    #[serde(rename = "CQR-m")]
    CqrM,
    #[serde(rename = "CQR-r")]
    CqrR,
}

impl MethodTag {
    pub const ALL: [MethodTag; 3] = [MethodTag::Cqr, MethodTag::CqrM, MethodTag::CqrR];

    pub fn needs_median(self) -> bool {
        self == MethodTag::CqrM
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Cqr => "CQR",
            MethodTag::CqrM => "CQR-m",
            MethodTag::CqrR => "CQR-r",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cqr" => Ok(MethodTag::Cqr),
            "cqr-m" | "cqr_m" => Ok(MethodTag::CqrM),
            "cqr-r" | "cqr_r" => Ok(MethodTag::CqrR),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Rank `k = ⌈(1 − α)(m + 1)⌉` of the conformal threshold among `m` scores.
///
/// The product is snapped to the nearest integer when it is within 1e-9 of
/// one, so that e.g. `0.9 · 10` is treated as exactly 9.
pub fn conformal_rank(m: usize, alpha: f64) -> usize {
    let t = (1.0 - alpha) * (m as f64 + 1.0);
    let nearest = t.round();
    let t = if (t - nearest).abs() < 1e-9 {
        nearest
    } else {
        t
    };
    t.ceil() as usize
}

/// The `k`-th smallest score with `k = ⌈(1 − α)(m + 1)⌉`, duplicates kept.
/// Returns `+∞` when `k > m`.
pub fn empirical_conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if scores.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if let Some((index, &value)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
        return Err(Error::InvalidScore { index, value });
    }
    let k = conformal_rank(scores.len(), alpha);
    if k > scores.len() {
        return Ok(f64::INFINITY);
    }
    let mut buf = scores.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}
