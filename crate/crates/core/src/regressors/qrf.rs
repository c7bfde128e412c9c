//! Quantile regression forest.
//!
//! Trees are grown on bootstrap samples with variance-reduction splits over a
//! random subset of `⌈√d⌉` features per node. Prediction forms the weighted
//! empirical CDF of the training responses, where each tree spreads weight
//! `1/T` uniformly over the in-bag draws sharing the query's leaf, and reads
//! quantiles off that single CDF.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Dataset, QuantileLevels};
use crate::error::Result;

use super::{weighted_quantile, QuantileModel, RawQuantiles};

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Range into `Tree::members`; `draws` counts in-bag draws with
    /// multiplicity.
    Leaf {
        start: usize,
        end: usize,
        #[cfg_attr(not(test), allow(dead_code))]
        draws: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    /// `(training index, weight)`; weights within a leaf sum to 1.
    members: Vec<(u32, f64)>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> &[(u32, f64)] {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
                Node::Leaf { start, end, .. } => return &self.members[start..end],
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantileForest {
    trees: Vec<Tree>,
    ys: Vec<f64>,
    levels: QuantileLevels,
}

struct Grower<'a> {
    cols: &'a [Vec<f64>],
    ys: &'a [f64],
    min_leaf: usize,
    mtry: usize,
    buf: Vec<(f64, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn grow(&mut self, rng: &mut ChaCha8Rng) -> Tree {
        let n = self.ys.len();
        let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut nodes = vec![Node::Leaf {
            start: 0,
            end: 0,
            draws: 0,
        }];
        let mut members = Vec::new();
        let mut stack = vec![(0usize, sample)];
        while let Some((id, idx)) = stack.pop() {
            match self.best_split(&idx, rng) {
                Some(split) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = idx
                        .into_iter()
                        .partition(|&i| self.cols[split.feature][i] <= split.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf {
                        start: 0,
                        end: 0,
                        draws: 0,
                    });
                    nodes.push(Node::Leaf {
                        start: 0,
                        end: 0,
                        draws: 0,
                    });
                    nodes[id] = Node::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r));
                    stack.push((left, l));
                }
                None => {
                    let start = members.len();
                    let mut idx = idx;
                    idx.sort_unstable();
                    let w = 1.0 / idx.len() as f64;
                    for chunk in idx.chunk_by(|a, b| a == b) {
                        members.push((chunk[0] as u32, w * chunk.len() as f64));
                    }
                    nodes[id] = Node::Leaf {
                        start,
                        end: members.len(),
                        draws: idx.len(),
                    };
                }
            }
        }
        Tree { nodes, members }
    }

    fn best_split(&mut self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let m = idx.len();
        if m < 2 * self.min_leaf {
            return None;
        }
        let first = self.ys[idx[0]];
        if idx.iter().all(|&i| self.ys[i] == first) {
            return None;
        }
        let total: f64 = idx.iter().map(|&i| self.ys[i]).sum();
        let base = total * total / m as f64;
        let d = self.cols.len();
        let mut best: Option<BestSplit> = None;
        for feature in index::sample(rng, d, self.mtry.min(d)) {
            let col = &self.cols[feature];
            self.buf.clear();
            self.buf.extend(idx.iter().map(|&i| (col[i], self.ys[i])));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 1..m {
                left_sum += self.buf[k - 1].1;
                if k < self.min_leaf || m - k < self.min_leaf {
                    continue;
                }
                let (prev, next) = (self.buf[k - 1].0, self.buf[k].0);
                if prev == next {
                    continue;
                }
                let right_sum = total - left_sum;
                // SSE reduction, up to the constant Σy²
                let gain =
                    left_sum * left_sum / k as f64 + right_sum * right_sum / (m - k) as f64 - base;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mid = prev + (next - prev) / 2.0;
                    // midpoint can round up to `next` for adjacent floats
                    let threshold = if mid < next { mid } else { prev };
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12 * base.abs().max(1e-300))
    }
}

impl QuantileForest {
    pub fn fit(
        train: &Dataset,
        levels: QuantileLevels,
        trees: usize,
        min_leaf: usize,
        max_features: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        train.ensure_non_empty()?;
        let d = train.d();
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| train.samples().iter().map(|s| s.x()[j]).collect())
            .collect();
        let ys: Vec<f64> = train.responses().collect();
        let mtry = max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize);
        let mut grower = Grower {
            cols: &cols,
            ys: &ys,
            min_leaf,
            mtry: mtry.max(1),
            buf: Vec::with_capacity(ys.len()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees = (0..trees).map(|_| grower.grow(&mut rng)).collect();
        Ok(Self { trees, ys, levels })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Weighted empirical CDF at `x` as `(response, weight)` sorted by
    /// response; weights sum to 1.
    pub fn weighted_responses(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let scale = 1.0 / self.trees.len() as f64;
        let mut pts: Vec<(f64, f64)> = self
            .trees
            .iter()
            .flat_map(|t| t.leaf(x).iter())
            .map(|&(i, w)| (self.ys[i as usize], w * scale))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    /// Conditional τ-quantile at `x`.
    pub fn quantile(&self, x: &[f64], tau: f64) -> f64 {
        weighted_quantile(&self.weighted_responses(x), 1.0, tau)
    }
}

impl QuantileModel for QuantileForest {
    fn raw_quantiles(&self, x: &[f64]) -> RawQuantiles {
        let cdf = self.weighted_responses(x);
        RawQuantiles {
            lo: weighted_quantile(&cdf, 1.0, self.levels.alpha_lo()),
            hi: weighted_quantile(&cdf, 1.0, self.levels.alpha_up()),
            median: self
                .levels
                .median()
                .map(|m| weighted_quantile(&cdf, 1.0, m)),
        }
    }
}
