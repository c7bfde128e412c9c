//! Black-box quantile regressors behind a uniform fit/predict interface.
//!
//! A regressor is anything implementing [`QuantileRegressor`]; fitting
//! returns a [`FittedQuantileModel`] which owns the raw predictor and applies
//! the post-processing every conformal method relies on: crossing quantiles
//! are swapped, and the median is clamped into the resulting band.

mod knn;
mod linear;
mod oracle;
mod qrf;

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{check_alpha, Dataset, QuantileLevels};
use crate::error::{Error, Result};
use crate::synthetic::SyntheticConfig;

pub use knn::KnnModel;
pub use linear::LinearPinballModel;
pub use oracle::OracleModel;
pub use qrf::QuantileForest;

/// Raw black-box outputs at the fitted levels, before any repair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawQuantiles {
    pub lo: f64,
    pub hi: f64,
    pub median: Option<f64>,
}

/// A trained predictor of conditional quantiles at fixed levels.
pub trait QuantileModel: fmt::Debug + Send + Sync {
    fn raw_quantiles(&self, x: &[f64]) -> RawQuantiles;
}

/// Anything that can be trained into a [`FittedQuantileModel`].
pub trait QuantileRegressor {
    fn fit(&self, train: &Dataset, levels: QuantileLevels) -> Result<FittedQuantileModel>;
}

/// Repaired predictions at one point: `lo ≤ median ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantilePrediction {
    pub lo: f64,
    pub hi: f64,
    pub median: Option<f64>,
}

impl QuantilePrediction {
    pub fn from_raw(raw: RawQuantiles) -> Self {
        let (lo, hi) = if raw.lo > raw.hi {
            (raw.hi, raw.lo)
        } else {
            (raw.lo, raw.hi)
        };
        Self {
            lo,
            hi,
            median: raw.median.map(|m| m.clamp(lo, hi)),
        }
    }
}

pub struct FittedQuantileModel {
    spec: Option<QuantileRegressorSpec>,
    levels: QuantileLevels,
    d: usize,
    inner: Box<dyn QuantileModel>,
}

impl fmt::Debug for FittedQuantileModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FittedQuantileModel")
            .field("spec", &self.spec)
            .field("levels", &self.levels)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

impl FittedQuantileModel {
    /// Wraps a custom model. `inner` must report a median whenever
    /// `levels.has_median()`.
    pub fn from_model(levels: QuantileLevels, d: usize, inner: Box<dyn QuantileModel>) -> Self {
        Self {
            spec: None,
            levels,
            d,
            inner,
        }
    }

    pub fn spec(&self) -> Option<&QuantileRegressorSpec> {
        self.spec.as_ref()
    }

    pub fn levels(&self) -> QuantileLevels {
        self.levels
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn inner(&self) -> &dyn QuantileModel {
        self.inner.as_ref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            })
        }
    }

    /// Repaired `(lo, hi)` and, when fitted, the clamped median.
    pub fn predict(&self, x: &[f64]) -> Result<QuantilePrediction> {
        self.check_dim(x)?;
        let mut raw = self.inner.raw_quantiles(x);
        if !self.levels.has_median() {
            raw.median = None;
        }
        Ok(QuantilePrediction::from_raw(raw))
    }

    /// Lower/upper quantiles, swapped if they cross.
    pub fn predict_pair(&self, x: &[f64]) -> Result<(f64, f64)> {
        let p = self.predict(x)?;
        Ok((p.lo, p.hi))
    }

    /// Median clamped into the repaired pair.
    pub fn predict_median(&self, x: &[f64]) -> Result<f64> {
        if !self.levels.has_median() {
            return Err(Error::MissingMedian);
        }
        self.predict(x)?.median.ok_or(Error::MissingMedian)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorKind {
    /// Linear quantile regression by full-batch subgradient descent on the
    /// pinball loss, step `step/√t`, features standardized internally.
    LinearPinball { epochs: usize, step: f64 },
    /// Quantile regression forest.
    Qrf {
        trees: usize,
        min_leaf: usize,
        max_features: Option<usize>,
    },
    /// k nearest neighbours, Euclidean. `None` means `⌈√n⌉`.
    Knn { k: Option<usize> },
    /// Exact conditional quantiles of the synthetic model.
    Oracle { synthetic: SyntheticConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileRegressorSpec {
    #[serde(flatten)]
    kind: RegressorKind,
    seed: u64,
}

impl QuantileRegressorSpec {
    pub const DEFAULT_EPOCHS: usize = 2000;
    pub const DEFAULT_STEP: f64 = 0.1;
    pub const DEFAULT_TREES: usize = 100;
    pub const DEFAULT_MIN_LEAF: usize = 5;

    pub fn new(kind: RegressorKind, seed: u64) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidHyperparameter(m.to_string()));
        match &kind {
            RegressorKind::LinearPinball { epochs, step } => {
                if *epochs < 1 {
                    return bad("epochs must be at least 1");
                }
                if !(step.is_finite() && *step > 0.0) {
                    return bad("learning rate must be positive");
                }
            }
            RegressorKind::Qrf {
                trees,
                min_leaf,
                max_features,
            } => {
                if *trees < 1 {
                    return bad("tree count must be at least 1");
                }
                if *min_leaf < 1 {
                    return bad("leaf size must be at least 1");
                }
                if *max_features == Some(0) {
                    return bad("max_features must be at least 1");
                }
            }
            RegressorKind::Knn { k } => {
                if *k == Some(0) {
                    return bad("k must be at least 1");
                }
            }
            RegressorKind::Oracle { .. } => {}
        }
        Ok(Self { kind, seed })
    }

    pub fn linear(epochs: usize, step: f64, seed: u64) -> Result<Self> {
        Self::new(RegressorKind::LinearPinball { epochs, step }, seed)
    }

    pub fn qrf(trees: usize, min_leaf: usize, seed: u64) -> Result<Self> {
        Self::new(
            RegressorKind::Qrf {
                trees,
                min_leaf,
                max_features: None,
            },
            seed,
        )
    }

    pub fn knn(k: Option<usize>, seed: u64) -> Result<Self> {
        Self::new(RegressorKind::Knn { k }, seed)
    }

    pub fn oracle(synthetic: SyntheticConfig) -> Self {
        Self {
            kind: RegressorKind::Oracle { synthetic },
            seed: 0,
        }
    }

    pub fn kind(&self) -> &RegressorKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            kind: self.kind.clone(),
            seed,
        }
    }
}

impl QuantileRegressor for QuantileRegressorSpec {
    fn fit(&self, train: &Dataset, levels: QuantileLevels) -> Result<FittedQuantileModel> {
        fit(self, train, levels)
    }
}

/// Trains the regressor described by `spec` at `levels`.
pub fn fit(
    spec: &QuantileRegressorSpec,
    train: &Dataset,
    levels: QuantileLevels,
) -> Result<FittedQuantileModel> {
    train.ensure_non_empty()?;
    let inner: Box<dyn QuantileModel> = match &spec.kind {
        RegressorKind::LinearPinball { epochs, step } => {
            Box::new(LinearPinballModel::fit(train, levels, *epochs, *step)?)
        }
        RegressorKind::Qrf {
            trees,
            min_leaf,
            max_features,
        } => Box::new(QuantileForest::fit(
            train,
            levels,
            *trees,
            *min_leaf,
            *max_features,
            spec.seed,
        )?),
        RegressorKind::Knn { k } => Box::new(KnnModel::fit(train, levels, *k)?),
        RegressorKind::Oracle { synthetic } => {
            Box::new(OracleModel::new(synthetic.clone(), train.d(), levels)?)
        }
    };
    Ok(FittedQuantileModel {
        spec: Some(spec.clone()),
        levels,
        d: train.d(),
        inner,
    })
}

/// Settings for [`tune_nominal_levels`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuningConfig {
    pub folds: usize,
    /// Cross-validated raw coverage to aim for.
    pub target: f64,
    pub seed: u64,
}

impl TuningConfig {
    pub const DEFAULT_FOLDS: usize = 5;

    /// Targets raw coverage `1 − 2α`.
    pub fn for_alpha(alpha: f64, seed: u64) -> Self {
        Self {
            folds: Self::DEFAULT_FOLDS,
            target: 1.0 - 2.0 * alpha,
            seed,
        }
    }
}

/// Multipliers of `α` searched for the nominal miscoverage `β`.
pub const TUNING_GRID: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];

/// Picks symmetric levels `(β/2, 1 − β/2)` whose k-fold cross-validated raw
/// coverage is closest to `cfg.target`; ties go to the earliest grid entry.
pub fn tune_nominal_levels(
    regressor: &dyn QuantileRegressor,
    train: &Dataset,
    alpha: f64,
    cfg: &TuningConfig,
) -> Result<QuantileLevels> {
    check_alpha(alpha)?;
    if cfg.folds < 2 {
        return Err(Error::InsufficientSamples(format!(
            "cross-validation needs at least 2 folds, got {}",
            cfg.folds
        )));
    }
    let n = train.len();
    if n < cfg.folds {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples cannot fill {} folds",
            cfg.folds
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let folds: Vec<Vec<usize>> = (0..cfg.folds)
        .map(|f| order.iter().copied().skip(f).step_by(cfg.folds).collect())
        .collect();

    let mut best: Option<(f64, QuantileLevels)> = None;
    for mult in TUNING_GRID {
        let beta = mult * alpha;
        if beta >= 1.0 {
            continue;
        }
        let levels = QuantileLevels::symmetric(beta, false)?;
        let mut hits = 0usize;
        for (f, held) in folds.iter().enumerate() {
            let fit_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let model = regressor.fit(&train.select(&fit_idx), levels)?;
            for &i in held {
                let s = &train.samples()[i];
                let (lo, hi) = model.predict_pair(s.x())?;
                if lo <= s.y() && s.y() <= hi {
                    hits += 1;
                }
            }
        }
        let gap = (hits as f64 / n as f64 - cfg.target).abs();
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, levels));
        }
    }
    best.map(|(_, l)| l).ok_or_else(|| {
        Error::InvalidConfig(format!("no admissible tuning level for alpha {alpha}"))
    })
}

/// `⌈τ·W⌉`-style quantile of a weighted sample sorted by value:
/// the smallest `y` whose cumulative weight reaches `τ·W`.
pub(crate) fn weighted_quantile(sorted: &[(f64, f64)], total: f64, tau: f64) -> f64 {
    let target = tau * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    for &(y, w) in sorted {
        acc += w;
        if acc >= target {
            return y;
        }
    }
    sorted.last().map_or(f64::NAN, |p| p.0)
}

#[cfg(test)]
pub(crate) mod stub {
    use super::*;

    /// Returns fixed raw outputs regardless of `x`.
    #[derive(Debug, Clone, Copy)]
    pub struct FixedModel(pub RawQuantiles);

    impl QuantileModel for FixedModel {
        fn raw_quantiles(&self, _x: &[f64]) -> RawQuantiles {
            self.0
        }
    }

    pub fn fixed(lo: f64, hi: f64, median: Option<f64>, d: usize) -> FittedQuantileModel {
        let levels = QuantileLevels::symmetric(0.1, median.is_some()).unwrap();
        FittedQuantileModel::from_model(
            levels,
            d,
            Box::new(FixedModel(RawQuantiles { lo, hi, median })),
        )
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::stub::fixed;
    use super::*;
    use crate::synthetic;

    #[test]
    fn crossing_swap_examples() {
        assert_eq!(
            fixed(3.0, 7.0, None, 1).predict_pair(&[0.0]).unwrap(),
            (3.0, 7.0)
        );
        assert_eq!(
            fixed(7.0, 3.0, None, 1).predict_pair(&[0.0]).unwrap(),
            (3.0, 7.0)
        );
        assert_eq!(
            fixed(5.0, 5.0, None, 1).predict_pair(&[0.0]).unwrap(),
            (5.0, 5.0)
        );
    }

    #[test]
    fn median_clamped_into_pair() {
        let m = fixed(3.0, 7.0, Some(9.0), 1);
        assert_eq!(m.predict_median(&[0.0]).unwrap(), 7.0);
        let m = fixed(7.0, 3.0, Some(1.0), 1);
        assert_eq!(m.predict_median(&[0.0]).unwrap(), 3.0);
        let m = fixed(3.0, 7.0, None, 1);
        assert!(matches!(
            m.predict_median(&[0.0]),
            Err(Error::MissingMedian)
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = fixed(0.0, 1.0, None, 2);
        assert!(matches!(
            m.predict_pair(&[0.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn hyperparameter_validation() {
        assert!(QuantileRegressorSpec::qrf(0, 5, 0).is_err());
        assert!(QuantileRegressorSpec::qrf(10, 0, 0).is_err());
        assert!(QuantileRegressorSpec::knn(Some(0), 0).is_err());
        assert!(QuantileRegressorSpec::linear(100, 0.0, 0).is_err());
        assert!(QuantileRegressorSpec::linear(0, 0.1, 0).is_err());
        assert!(QuantileRegressorSpec::linear(10, 0.1, 0).is_ok());
    }

    #[test]
    fn fit_rejects_empty_training_set() {
        let spec = QuantileRegressorSpec::knn(None, 0).unwrap();
        let empty = Dataset::new(vec![], 2).unwrap();
        let levels = QuantileLevels::symmetric(0.1, false).unwrap();
        assert!(matches!(
            fit(&spec, &empty, levels),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn oracle_model_matches_synthetic_quantiles() {
        let cfg = synthetic::SyntheticConfig::with_dim(10, 1).unwrap();
        let ds = synthetic::generate(&cfg, 50).unwrap();
        let levels = QuantileLevels::symmetric(0.1, true).unwrap();
        let model = fit(&QuantileRegressorSpec::oracle(cfg.clone()), &ds, levels).unwrap();
        for s in ds.samples() {
            let (lo, hi) = model.predict_pair(s.x()).unwrap();
            assert_eq!(lo, synthetic::oracle_quantile(&cfg, s.x(), 0.05).unwrap());
            assert_eq!(hi, synthetic::oracle_quantile(&cfg, s.x(), 0.95).unwrap());
            let mid = model.predict_median(s.x()).unwrap();
            assert_eq!(mid, synthetic::location(cfg.index(s.x())));
        }
        let zero = vec![0.0; 10];
        assert_eq!(model.predict_median(&zero).unwrap(), 0.0);
    }

    #[test]
    fn tuning_rejects_single_fold() {
        let cfg = synthetic::SyntheticConfig::with_dim(3, 0).unwrap();
        let ds = synthetic::generate(&cfg, 30).unwrap();
        let spec = QuantileRegressorSpec::oracle(cfg);
        let t = TuningConfig {
            folds: 1,
            target: 0.9,
            seed: 0,
        };
        assert!(tune_nominal_levels(&spec, &ds, 0.1, &t).is_err());
        let t = TuningConfig { folds: 40, ..t };
        assert!(tune_nominal_levels(&spec, &ds, 0.1, &t).is_err());
    }

    struct CoverEverything;

    impl QuantileRegressor for CoverEverything {
        fn fit(&self, train: &Dataset, levels: QuantileLevels) -> Result<FittedQuantileModel> {
            let raw = RawQuantiles {
                lo: -1e9,
                hi: 1e9,
                median: None,
            };
            Ok(FittedQuantileModel::from_model(
                levels,
                train.d(),
                Box::new(stub::FixedModel(raw)),
            ))
        }
    }

    #[test]
    fn tuning_tie_break_takes_first_grid_entry() {
        let cfg = synthetic::SyntheticConfig::with_dim(3, 0).unwrap();
        let ds = synthetic::generate(&cfg, 40).unwrap();
        let t = TuningConfig::for_alpha(0.1, 0);
        let levels = tune_nominal_levels(&CoverEverything, &ds, 0.1, &t).unwrap();
        assert!((levels.alpha_lo() - 0.0125).abs() < 1e-15);
        assert!((levels.alpha_up() - 0.9875).abs() < 1e-15);
    }

    #[test]
    fn tuning_with_oracle_selects_alpha() {
        // With exact quantiles the CV coverage at β is ≈ 1 − β, so a 0.9
        // target lands on β = α = 0.1 (neighbours sit at 0.85 and 0.95).
        let cfg = synthetic::SyntheticConfig::with_dim(5, 8).unwrap();
        let ds = synthetic::generate(&cfg, 4000).unwrap();
        let spec = QuantileRegressorSpec::oracle(cfg);
        let t = TuningConfig {
            folds: 5,
            target: 0.9,
            seed: 3,
        };
        let levels = tune_nominal_levels(&spec, &ds, 0.1, &t).unwrap();
        assert!((levels.alpha_lo() - 0.05).abs() < 1e-15);
        assert!((levels.alpha_up() - 0.95).abs() < 1e-15);
    }

    #[test]
    fn weighted_quantile_matches_order_statistic() {
        let v: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 1.0)).collect();
        assert_eq!(weighted_quantile(&v, 10.0, 0.05), 1.0);
        assert_eq!(weighted_quantile(&v, 10.0, 0.5), 5.0);
        assert_eq!(weighted_quantile(&v, 10.0, 0.95), 10.0);
        assert_eq!(weighted_quantile(&v, 10.0, 0.3), 3.0);
    }

    proptest! {
        #[test]
        fn repaired_pair_is_ordered(lo in -1e6f64..1e6, hi in -1e6f64..1e6, mid in -1e6f64..1e6) {
            let m = fixed(lo, hi, Some(mid), 1);
            let p = m.predict(&[0.0]).unwrap();
            prop_assert!(p.lo <= p.hi);
            prop_assert_eq!(p.lo, lo.min(hi));
            prop_assert_eq!(p.hi, lo.max(hi));
            let med = p.median.unwrap();
            prop_assert!(p.lo <= med && med <= p.hi);
        }
    }
}
