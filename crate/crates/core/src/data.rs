//! CSV ingestion, response standardization, and train/calibration/test
//! splitting.

use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Sample};
use crate::error::{Error, Result};

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

impl From<&str> for TargetColumn {
    fn from(s: &str) -> Self {
        TargetColumn::Name(s.to_string())
    }
}

impl From<usize> for TargetColumn {
    fn from(i: usize) -> Self {
        TargetColumn::Index(i)
    }
}

/// A dataset together with its CSV header.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

/// Reads a comma-separated file with one header row. The target column
/// becomes `y`; every other column, in header order, becomes `x`.
pub fn load_csv(path: impl AsRef<Path>, target: impl Into<TargetColumn>) -> Result<Dataset> {
    load_csv_with_header(path, target).map(|l| l.dataset)
}

pub fn load_csv_with_header(
    path: impl AsRef<Path>,
    target: impl Into<TargetColumn>,
) -> Result<LoadedCsv> {
    let path = path.as_ref();
    let target = target.into();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(File::open(path)?);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let target_idx = match &target {
        TargetColumn::Name(name) => headers.iter().position(|h| h == name),
        TargetColumn::Index(i) => (*i < headers.len()).then_some(*i),
    }
    .ok_or_else(|| Error::MissingTarget {
        path: path.to_path_buf(),
        column: match &target {
            TargetColumn::Name(n) => n.clone(),
            TargetColumn::Index(i) => format!("#{i}"),
        },
    })?;
    if headers.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "{}: need at least one feature column besides the target",
            path.display()
        )));
    }

    let mut samples = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let row = r + 2;
        let mut x = Vec::with_capacity(headers.len() - 1);
        let mut y = 0.0;
        for (c, cell) in record.iter().enumerate() {
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadCell {
                    path: path.to_path_buf(),
                    row,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                })?;
            if c == target_idx {
                y = value;
            } else {
                x.push(value);
            }
        }
        samples.push(Sample::new(x, y)?);
    }
    if samples.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let feature_names = headers
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != target_idx)
        .map(|(_, h)| h.clone())
        .collect::<Vec<_>>();
    Ok(LoadedCsv {
        dataset: Dataset::new(samples, feature_names.len())?,
        target_name: headers[target_idx].clone(),
        feature_names,
    })
}

/// Writes features then the target as the last column. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv(
    ds: &Dataset,
    path: impl AsRef<Path>,
    feature_names: &[String],
    target_name: &str,
) -> Result<()> {
    if feature_names.len() != ds.d() {
        return Err(Error::DimensionMismatch {
            expected: ds.d(),
            got: feature_names.len(),
        });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(
        feature_names
            .iter()
            .map(String::as_str)
            .chain([target_name]),
    )?;
    for s in ds.samples() {
        w.write_record(
            s.x()
                .iter()
                .chain(std::iter::once(&s.y()))
                .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedCounts {
    pub train: usize,
    pub calib: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    gamma: f64,
    test_fraction: f64,
    seed: u64,
    fixed_counts: Option<FixedCounts>,
}

impl SplitConfig {
    pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

    pub fn new(gamma: f64, test_fraction: f64, seed: u64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma {gamma} must lie in (0, 1)"
            )));
        }
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::InvalidConfig(format!(
                "test fraction {test_fraction} must lie in [0, 1)"
            )));
        }
        Ok(Self {
            gamma,
            test_fraction,
            seed,
            fixed_counts: None,
        })
    }

    /// Exact part sizes, overriding both fractions.
    pub fn with_fixed_counts(mut self, counts: FixedCounts) -> Result<Self> {
        if counts.train == 0 || counts.calib == 0 || counts.test == 0 {
            return Err(Error::InvalidConfig(
                "fixed counts must all be positive".into(),
            ));
        }
        self.fixed_counts = Some(counts);
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn test_fraction(&self) -> f64 {
        self.test_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fixed_counts(&self) -> Option<FixedCounts> {
        self.fixed_counts
    }

    /// `(train, calib, test)` sizes for `n` samples.
    pub fn sizes(&self, n: usize) -> Result<FixedCounts> {
        let counts = match self.fixed_counts {
            Some(c) => {
                if c.train + c.calib + c.test > n {
                    return Err(Error::InsufficientSamples(format!(
                        "fixed counts {}+{}+{} exceed {n} samples",
                        c.train, c.calib, c.test
                    )));
                }
                c
            }
            None => {
                let test = floor_snapped(self.test_fraction * n as f64);
                let rest = n.saturating_sub(test);
                let train = floor_snapped(self.gamma * rest as f64).max(1);
                FixedCounts {
                    train,
                    calib: rest.saturating_sub(train),
                    test,
                }
            }
        };
        if counts.train == 0 || counts.calib == 0 || counts.test == 0 {
            return Err(Error::InsufficientSamples(format!(
                "{n} samples give parts train={}, calib={}, test={}",
                counts.train, counts.calib, counts.test
            )));
        }
        Ok(counts)
    }
}

fn floor_snapped(v: f64) -> usize {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r as usize
    } else {
        v.floor() as usize
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Seeded random partition into `(train, calib, test)`: after shuffling, the
/// first block goes to test, then `⌊γ·m⌋` (at least 1) of the remaining `m`
/// to training, the rest to calibration.
pub fn split(ds: &Dataset, cfg: &SplitConfig) -> Result<(Dataset, Dataset, Dataset)> {
    let c = cfg.sizes(ds.len())?;
    let order = shuffled(ds.len(), cfg.seed);
    let (test, rest) = order.split_at(c.test);
    let (train, rest) = rest.split_at(c.train);
    let calib = &rest[..c.calib];
    Ok((ds.select(train), ds.select(calib), ds.select(test)))
}

/// Training/calibration split only, for sources with an independent test
/// set: `⌊γ·n⌋` (at least 1) samples train, the rest calibrate.
pub fn split_train_calib(ds: &Dataset, gamma: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma {gamma} must lie in (0, 1)"
        )));
    }
    let n = ds.len();
    let train = floor_snapped(gamma * n as f64).max(1);
    if train >= n {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples leave no calibration set at gamma {gamma}"
        )));
    }
    let order = shuffled(n, seed);
    let (a, b) = order.split_at(train);
    Ok((ds.select(a), ds.select(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    scale: f64,
}

impl StandardizationParams {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, y: f64) -> f64 {
        y / self.scale
    }

    pub fn restore(&self, y: f64) -> f64 {
        y * self.scale
    }
}

/// Divides all responses by the mean absolute training response.
pub fn standardize_response(
    train: &Dataset,
    calib: &Dataset,
    test: &Dataset,
) -> Result<(Dataset, Dataset, Dataset, StandardizationParams)> {
    train.ensure_non_empty()?;
    let scale = train.responses().map(f64::abs).sum::<f64>() / train.len() as f64;
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::ZeroScale);
    }
    let params = StandardizationParams { scale };
    let f = |y| params.apply(y);
    Ok((
        train.map_responses(f)?,
        calib.map_responses(f)?,
        test.map_responses(f)?,
        params,
    ))
}
