//! Repeated-split experiment runner and result emission.
//!
//! Each repetition draws (or reshuffles) the data, fits one black-box model
//! per training fraction γ, and calibrates every requested method against
//! that same model and split, so width differences isolate the conformity
//! score.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::conformal::{self, ConformalPredictor};
use crate::data::{self, FixedCounts, SplitConfig, TargetColumn};
use crate::domain::{check_alpha, Dataset, MethodTag, QuantileLevels};
use crate::error::{Error, Result};
use crate::regressors::{self, QuantilePrediction, QuantileRegressorSpec, TuningConfig};
use crate::synthetic::{self, SyntheticConfig};

/// Training fractions swept in the real-data comparison.
pub const GAMMA_GRID: [f64; 9] = [0.1, 0.25, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98];

pub const DEFAULT_SYNTHETIC_TEST: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    /// `n` samples split into training/calibration by γ, evaluated on an
    /// independent draw of `n_test` samples.
    Synthetic {
        config: SyntheticConfig,
        n: usize,
        n_test: usize,
    },
    /// A CSV file split into training/calibration/test each repetition.
    Csv {
        path: PathBuf,
        target: TargetColumn,
        standardize: bool,
    },
}

/// Nominal-level tuning of the black box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuning {
    Off,
    /// Tune to this cross-validated raw coverage.
    Target(f64),
}

impl Serialize for Tuning {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for Tuning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tuning::Off => f.write_str("off"),
            Tuning::Target(v) => write!(f, "target={v}"),
        }
    }
}

impl FromStr for Tuning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "off" {
            return Ok(Tuning::Off);
        }
        s.strip_prefix("target=")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| *v > 0.0 && *v < 1.0)
            .map(Tuning::Target)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "tuning must be `off` or `target=<v>` with v in (0,1), got `{s}`"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub regressor: QuantileRegressorSpec,
    pub methods: Vec<MethodTag>,
    pub alpha: f64,
    pub gammas: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub eps: f64,
    pub tuning: Tuning,
    pub folds: usize,
    pub test_fraction: f64,
    pub fixed_counts: Option<FixedCounts>,
}

impl ExperimentConfig {
    pub fn new(source: DataSource, regressor: QuantileRegressorSpec) -> Self {
        Self {
            source,
            regressor,
            methods: MethodTag::ALL.to_vec(),
            alpha: 0.1,
            gammas: vec![0.75],
            repetitions: 10,
            seed: 0,
            eps: conformal::DEFAULT_EPS,
            tuning: Tuning::Off,
            folds: TuningConfig::DEFAULT_FOLDS,
            test_fraction: SplitConfig::DEFAULT_TEST_FRACTION,
            fixed_counts: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.gammas.is_empty() {
            return bad("at least one gamma is required".into());
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return bad(format!("gamma {g} must lie in (0, 1)"));
        }
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1".into());
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return bad(format!(
                "eps must be finite and non-negative, got {}",
                self.eps
            ));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad(format!(
                "test fraction {} must lie in [0, 1)",
                self.test_fraction
            ));
        }
        if let Tuning::Target(_) = self.tuning {
            if self.folds < 2 {
                return bad("tuning needs at least 2 folds".into());
            }
        }
        if let DataSource::Synthetic { n, n_test, config } = &self.source {
            if *n < 2 || *n_test < 1 {
                return bad("synthetic source needs n ≥ 2 and n_test ≥ 1".into());
            }
            if self.fixed_counts.is_some() {
                return bad("fixed counts apply to CSV sources only".into());
            }
            if let regressors::RegressorKind::Oracle { synthetic } = self.regressor.kind() {
                if synthetic.beta() != config.beta() {
                    return bad("oracle regressor must use the source's synthetic model".into());
                }
            }
        } else if let regressors::RegressorKind::Oracle { .. } = self.regressor.kind() {
            return bad("the oracle regressor requires a synthetic source".into());
        }
        Ok(())
    }
}

/// Coverage and width of one predictor on one test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub coverage: f64,
    /// Mean width over finite intervals; `None` if every interval is infinite.
    pub avg_width: Option<f64>,
    pub n_infinite: usize,
}

/// Infinite intervals count as covering and are left out of the width mean.
pub fn evaluate(predictor: &ConformalPredictor, test: &Dataset) -> Result<Evaluation> {
    test.ensure_non_empty()?;
    let intervals = test
        .samples()
        .iter()
        .map(|s| predictor.predict_interval(s.x()).map(|i| (i, s.y())))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(intervals.into_iter()))
}

fn summarize(items: impl Iterator<Item = (crate::domain::Interval, f64)>) -> Evaluation {
    let (mut n, mut hits, mut n_inf, mut width_sum) = (0usize, 0usize, 0usize, 0.0);
    for (interval, y) in items {
        n += 1;
        if interval.contains(y) {
            hits += 1;
        }
        if interval.is_finite() {
            width_sum += interval.width();
        } else {
            n_inf += 1;
        }
    }
    let finite = n - n_inf;
    Evaluation {
        coverage: hits as f64 / n as f64,
        avg_width: (finite > 0).then(|| width_sum / finite as f64),
        n_infinite: n_inf,
    }
}

fn evaluate_predictions(
    method: MethodTag,
    threshold: f64,
    eps: f64,
    predictions: &[QuantilePrediction],
    responses: &[f64],
) -> Result<Evaluation> {
    let intervals = predictions
        .iter()
        .zip(responses)
        .map(|(p, &y)| conformal::interval(method, p, threshold, eps).map(|i| (i, y)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(intervals.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: MethodTag,
    pub gamma: f64,
    pub repetition: usize,
    pub coverage: f64,
    pub avg_width: Option<f64>,
    pub n_infinite: usize,
    /// `None` when the calibration set was too small (threshold `+∞`).
    pub threshold: Option<f64>,
    pub alpha_lo: f64,
    pub alpha_up: f64,
    pub n_train: usize,
    pub n_calib: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: MethodTag,
    pub gamma: f64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    /// Over repetitions with at least one finite interval.
    pub width_mean: Option<f64>,
    pub width_std: Option<f64>,
    pub n_infinite: usize,
    pub repetitions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub results: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Population mean and standard deviation (divisor `n`).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Aggregates per `(method, γ)`, ordered by γ then method.
pub fn aggregate(records: &[RunRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(u64, MethodTag), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        // γ ∈ (0,1), so bit order equals numeric order
        groups
            .entry((r.gamma.to_bits(), r.method))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((gamma, method), rs)| {
            let cov: Vec<f64> = rs.iter().map(|r| r.coverage).collect();
            let widths: Vec<f64> = rs.iter().filter_map(|r| r.avg_width).collect();
            let (coverage_mean, coverage_std) = mean_std(&cov).unwrap_or((f64::NAN, f64::NAN));
            let w = mean_std(&widths);
            Aggregate {
                method,
                gamma: f64::from_bits(gamma),
                coverage_mean,
                coverage_std,
                width_mean: w.map(|w| w.0),
                width_std: w.map(|w| w.1),
                n_infinite: rs.iter().map(|r| r.n_infinite).sum(),
                repetitions: rs.len(),
            }
        })
        .collect()
}

impl ExperimentResult {
    pub fn aggregate_for(&self, method: MethodTag, gamma: f64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.gamma == gamma)
    }

    /// Method with the smallest mean width at each γ.
    pub fn narrowest_by_gamma(&self) -> Vec<(f64, MethodTag, f64)> {
        let mut out: Vec<(f64, MethodTag, f64)> = Vec::new();
        for a in &self.aggregates {
            let Some(w) = a.width_mean else { continue };
            match out.iter_mut().find(|e| e.0 == a.gamma) {
                Some(e) if w < e.2 => *e = (a.gamma, a.method, w),
                Some(_) => {}
                None => out.push((a.gamma, a.method, w)),
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One aggregate row per `(method, γ)`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for a in &self.aggregates {
            w.serialize(a)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

pub fn emit(result: &ExperimentResult, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let body = match format {
        OutputFormat::Json => result.to_json()?,
        OutputFormat::Csv => result.to_csv()?,
    };
    fs::write(path, body)?;
    Ok(())
}

/// SplitMix64 finalizer; decorrelates per-repetition streams.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_DATA: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_SPLIT: u64 = 3;
const STREAM_TUNE: u64 = 4;
const STREAM_FIT: u64 = 5;

struct Prepared {
    train: Dataset,
    calib: Dataset,
    test: Dataset,
}

fn prepare(
    cfg: &ExperimentConfig,
    csv: Option<&Dataset>,
    synthetic_data: Option<&(Dataset, Dataset)>,
    gamma: f64,
    rep_seed: u64,
) -> Result<Prepared> {
    let split_seed = derive_seed(rep_seed, STREAM_SPLIT);
    match (&cfg.source, csv, synthetic_data) {
        (DataSource::Synthetic { .. }, _, Some((pool, test))) => {
            let (train, calib) = data::split_train_calib(pool, gamma, split_seed)?;
            Ok(Prepared {
                train,
                calib,
                test: test.clone(),
            })
        }
        (DataSource::Csv { standardize, .. }, Some(ds), _) => {
            let mut split_cfg = SplitConfig::new(gamma, cfg.test_fraction, split_seed)?;
            if let Some(counts) = cfg.fixed_counts {
                split_cfg = split_cfg.with_fixed_counts(counts)?;
            }
            let (train, calib, test) = data::split(ds, &split_cfg)?;
            if *standardize {
                let (train, calib, test, _) = data::standardize_response(&train, &calib, &test)?;
                Ok(Prepared { train, calib, test })
            } else {
                Ok(Prepared { train, calib, test })
            }
        }
        _ => unreachable!("source data is loaded before preparing splits"),
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    parts: &Prepared,
    gamma: f64,
    repetition: usize,
    rep_seed: u64,
) -> Result<Vec<RunRecord>> {
    let needs_median = cfg.methods.iter().any(|m| m.needs_median());
    let regressor = cfg.regressor.with_seed(derive_seed(rep_seed, STREAM_FIT));
    let levels = match cfg.tuning {
        Tuning::Off => QuantileLevels::symmetric(cfg.alpha, needs_median)?,
        Tuning::Target(target) => {
            let tcfg = TuningConfig {
                folds: cfg.folds,
                target,
                seed: derive_seed(rep_seed, STREAM_TUNE),
            };
            regressors::tune_nominal_levels(&regressor, &parts.train, cfg.alpha, &tcfg)?
                .with_median(needs_median)?
        }
    };
    let model = Arc::new(regressors::fit(&regressor, &parts.train, levels)?);
    let predict = |ds: &Dataset| {
        ds.samples()
            .iter()
            .map(|s| model.predict(s.x()))
            .collect::<Result<Vec<_>>>()
    };
    let calib_pred = predict(&parts.calib)?;
    let test_pred = predict(&parts.test)?;
    let calib_y: Vec<f64> = parts.calib.responses().collect();
    let test_y: Vec<f64> = parts.test.responses().collect();

    cfg.methods
        .iter()
        .map(|&method| {
            let threshold =
                conformal::calibrate_threshold(method, &calib_pred, &calib_y, cfg.alpha, cfg.eps)?;
            let eval = evaluate_predictions(method, threshold, cfg.eps, &test_pred, &test_y)?;
            Ok(RunRecord {
                method,
                gamma,
                repetition,
                coverage: eval.coverage,
                avg_width: eval.avg_width,
                n_infinite: eval.n_infinite,
                threshold: threshold.is_finite().then_some(threshold),
                alpha_lo: levels.alpha_lo(),
                alpha_up: levels.alpha_up(),
                n_train: parts.train.len(),
                n_calib: parts.calib.len(),
                n_test: parts.test.len(),
            })
        })
        .collect()
}

/// Runs every `(repetition, γ, method)` cell. Repetition `r` uses seed
/// `cfg.seed + r`, from which data, split, tuning and fitting streams are
/// derived.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let csv = match &cfg.source {
        DataSource::Csv { path, target, .. } => Some(data::load_csv(path, target.clone())?),
        DataSource::Synthetic { .. } => None,
    };
    let mut results = Vec::new();
    for repetition in 0..cfg.repetitions {
        let rep_seed = cfg.seed.wrapping_add(repetition as u64);
        let synthetic_data = match &cfg.source {
            DataSource::Synthetic { config, n, n_test } => Some((
                synthetic::generate(&config.with_seed(derive_seed(rep_seed, STREAM_DATA)), *n)?,
                synthetic::generate(
                    &config.with_seed(derive_seed(rep_seed, STREAM_TEST)),
                    *n_test,
                )?,
            )),
            DataSource::Csv { .. } => None,
        };
        for &gamma in &cfg.gammas {
            let parts = prepare(cfg, csv.as_ref(), synthetic_data.as_ref(), gamma, rep_seed)?;
            results.extend(run_cell(cfg, &parts, gamma, repetition, rep_seed)?);
        }
    }
    let aggregates = aggregate(&results);
    Ok(ExperimentResult {
        config: cfg.clone(),
        results,
        aggregates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::stub::fixed;

    #[test]
    fn evaluate_counts_hits() {
        let model = Arc::new(fixed(2.0, 8.0, None, 1));
        let p = ConformalPredictor::from_parts(MethodTag::Cqr, model, 0.0, 0.1, 0.0).unwrap();
        let test = Dataset::from_rows(vec![vec![0.0]; 3], vec![1.0, 5.0, 9.0]).unwrap();
        let e = evaluate(&p, &test).unwrap();
        assert!((e.coverage - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.avg_width, Some(6.0));
        assert_eq!(e.n_infinite, 0);

        let inside = Dataset::from_rows(vec![vec![0.0]; 2], vec![3.0, 7.0]).unwrap();
        assert_eq!(evaluate(&p, &inside).unwrap().coverage, 1.0);
    }

    #[test]
    fn evaluate_infinite_threshold() {
        let model = Arc::new(fixed(2.0, 8.0, None, 1));
        let p = ConformalPredictor::from_parts(MethodTag::CqrR, model, f64::INFINITY, 0.1, 0.0)
            .unwrap();
        let test = Dataset::from_rows(vec![vec![0.0]; 3], vec![1.0, 5.0, 1e9]).unwrap();
        let e = evaluate(&p, &test).unwrap();
        assert_eq!(e.coverage, 1.0);
        assert_eq!(e.n_infinite, 3);
        assert_eq!(e.avg_width, None);
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!((m, s), (2.0, 1.0));
        assert!(mean_std(&[]).is_none());
    }

    #[test]
    fn tuning_parse() {
        assert_eq!("off".parse::<Tuning>().unwrap(), Tuning::Off);
        assert_eq!("target=0.8".parse::<Tuning>().unwrap(), Tuning::Target(0.8));
        assert!("target=2".parse::<Tuning>().is_err());
        assert!("on".parse::<Tuning>().is_err());
        assert_eq!(Tuning::Target(0.8).to_string(), "target=0.8");
    }

    #[test]
    fn config_validation() {
        let syn = SyntheticConfig::with_dim(5, 0).unwrap();
        let source = DataSource::Synthetic {
            config: syn.clone(),
            n: 100,
            n_test: 100,
        };
        let base = ExperimentConfig::new(source, QuantileRegressorSpec::oracle(syn));
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.methods.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.gammas = vec![1.0];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.repetitions = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.alpha = 1.5;
        assert!(c.validate().is_err());
        let mut c = base;
        c.regressor = QuantileRegressorSpec::oracle(SyntheticConfig::with_dim(6, 0).unwrap());
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_are_derived_distinctly() {
        let a = derive_seed(0, 1);
        assert_ne!(a, derive_seed(0, 2));
        assert_ne!(a, derive_seed(1, 1));
        assert_eq!(a, derive_seed(0, 1));
    }
}
