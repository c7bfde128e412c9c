//! Split-conformal quantile regression.
//!
//! A black-box quantile regressor is fitted on one part of the data and its
//! lower/upper quantile band is conformalized on a disjoint calibration part,
//! giving prediction intervals with finite-sample marginal coverage
//! `P(Y ∈ C(X)) ≥ 1 − α`. Three conformity scores are provided:
//!
//! - [`MethodTag::Cqr`]: additive shift of the band,
//!   `E = max(lo − y, y − hi)`.
//! - [`MethodTag::CqrM`]: each tail scaled by its distance to an estimated
//!   median.
//! - [`MethodTag::CqrR`]: both tails scaled by the band width.
//!
//! The crate also ships the heteroscedastic synthetic benchmark with its
//! exact conditional quantiles ([`synthetic`]), CSV loading and the
//! train/calibration/test protocol ([`data`]), and a repeated-split
//! experiment runner ([`bench`]) driven by the `cqr-bench` binary.
//!
//! ```
//! use cqr::{conformal, data, regressors, synthetic, MethodTag, QuantileLevels};
//!
//! let cfg = synthetic::SyntheticConfig::with_dim(10, 7).unwrap();
//! let ds = synthetic::generate(&cfg, 400).unwrap();
//! let split = data::SplitConfig::new(0.5, 0.2, 1).unwrap();
//! let (train, calib, test) = data::split(&ds, &split).unwrap();
//!
//! let spec = regressors::QuantileRegressorSpec::knn(None, 1).unwrap();
//! let levels = QuantileLevels::symmetric(0.1, false).unwrap();
//! let model = regressors::fit(&spec, &train, levels).unwrap();
//! let predictor = conformal::calibrate(MethodTag::Cqr, model, &calib, 0.1, 1e-6).unwrap();
//! let interval = predictor.predict_interval(test.samples()[0].x()).unwrap();
//! assert!(interval.lo() <= interval.hi());
//! ```

pub mod bench;
pub mod conformal;
pub mod data;
pub mod domain;
mod error;
pub mod regressors;
pub mod synthetic;

pub use conformal::ConformalPredictor;
pub use domain::{
    empirical_conformal_quantile, Dataset, Interval, MethodTag, QuantileLevels, Sample,
};
pub use error::{Error, Result};
pub use regressors::{FittedQuantileModel, QuantileRegressorSpec};
