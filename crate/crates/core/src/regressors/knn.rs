use crate::domain::{Dataset, QuantileLevels};
use crate::error::Result;

use super::{weighted_quantile, QuantileModel, RawQuantiles};

/// Empirical quantiles of the responses of the `k` nearest training points
/// (Euclidean distance, ties broken by training order).
#[derive(Debug, Clone)]
pub struct KnnModel {
    rows: Vec<f64>,
    ys: Vec<f64>,
    d: usize,
    k: usize,
    levels: QuantileLevels,
}

impl KnnModel {
    pub fn fit(train: &Dataset, levels: QuantileLevels, k: Option<usize>) -> Result<Self> {
        train.ensure_non_empty()?;
        let n = train.len();
        let k = k
            .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
            .clamp(1, n);
        let rows = train
            .samples()
            .iter()
            .flat_map(|s| s.x().iter().copied())
            .collect();
        Ok(Self {
            rows,
            ys: train.responses().collect(),
            d: train.d(),
            k,
            levels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn neighbour_responses(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .chunks_exact(self.d)
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_dist);
            dist.truncate(self.k);
        }
        let mut ys: Vec<(f64, f64)> = dist.iter().map(|&(_, i)| (self.ys[i], 1.0)).collect();
        ys.sort_by(|a, b| a.0.total_cmp(&b.0));
        ys
    }
}

impl QuantileModel for KnnModel {
    fn raw_quantiles(&self, x: &[f64]) -> RawQuantiles {
        let ys = self.neighbour_responses(x);
        let total = ys.len() as f64;
        RawQuantiles {
            lo: weighted_quantile(&ys, total, self.levels.alpha_lo()),
            hi: weighted_quantile(&ys, total, self.levels.alpha_up()),
            median: self
                .levels
                .median()
                .map(|m| weighted_quantile(&ys, total, m)),
        }
    }
}
