use crate::domain::{Dataset, QuantileLevels};
use crate::error::Result;

use super::{weighted_quantile, QuantileModel, RawQuantiles};

/// Pinball (check) loss `ρ_τ(u) = u·(τ − 1{u < 0})`.
pub fn pinball_loss(residual: f64, tau: f64) -> f64 {
    if residual < 0.0 {
        residual * (tau - 1.0)
    } else {
        residual * tau
    }
}

/// One linear quantile function in original units: `intercept + slopes·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQuantile {
    pub tau: f64,
    pub intercept: f64,
    pub slopes: Vec<f64>,
}

impl LinearQuantile {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.slopes.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Total pinball loss over `data`.
    pub fn loss(&self, data: &Dataset) -> f64 {
        data.samples()
            .iter()
            .map(|s| pinball_loss(s.y() - self.predict(s.x()), self.tau))
            .sum()
    }
}

/// Independent linear quantile fits at the requested levels.
#[derive(Debug, Clone)]
pub struct LinearPinballModel {
    lo: LinearQuantile,
    hi: LinearQuantile,
    median: Option<LinearQuantile>,
}

impl LinearPinballModel {
    pub fn fit(train: &Dataset, levels: QuantileLevels, epochs: usize, step: f64) -> Result<Self> {
        train.ensure_non_empty()?;
        let problem = Standardized::new(train);
        Ok(Self {
            lo: problem.fit(levels.alpha_lo(), epochs, step),
            hi: problem.fit(levels.alpha_up(), epochs, step),
            median: levels.median().map(|m| problem.fit(m, epochs, step)),
        })
    }

    pub fn lower(&self) -> &LinearQuantile {
        &self.lo
    }

    pub fn upper(&self) -> &LinearQuantile {
        &self.hi
    }

    pub fn median(&self) -> Option<&LinearQuantile> {
        self.median.as_ref()
    }
}

impl QuantileModel for LinearPinballModel {
    fn raw_quantiles(&self, x: &[f64]) -> RawQuantiles {
        RawQuantiles {
            lo: self.lo.predict(x),
            hi: self.hi.predict(x),
            median: self.median.as_ref().map(|m| m.predict(x)),
        }
    }
}

/// Training data with zero-mean/unit-variance features and responses.
/// Constant features get unit scale and contribute nothing.
struct Standardized {
    z: Vec<f64>,
    t: Vec<f64>,
    n: usize,
    d: usize,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
}

fn mean_and_scale(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    (
        mean,
        if sd > 1e-12 * mean.abs().max(1.0) {
            sd
        } else {
            1.0
        },
    )
}

impl Standardized {
    fn new(train: &Dataset) -> Self {
        let n = train.len();
        let d = train.d();
        let (x_mean, x_scale): (Vec<f64>, Vec<f64>) = (0..d)
            .map(|j| mean_and_scale(train.samples().iter().map(move |s| s.x()[j]), n))
            .unzip();
        let (y_mean, y_scale) = mean_and_scale(train.samples().iter().map(|s| s.y()), n);
        let z = train
            .samples()
            .iter()
            .flat_map(|s| {
                s.x()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| (v - x_mean[j]) / x_scale[j])
                    .collect::<Vec<_>>()
            })
            .collect();
        let t = train.responses().map(|y| (y - y_mean) / y_scale).collect();
        Self {
            z,
            t,
            n,
            d,
            x_mean,
            x_scale,
            y_mean,
            y_scale,
        }
    }

    fn mean_loss(&self, params: &[f64], tau: f64) -> f64 {
        self.z
            .chunks_exact(self.d)
            .zip(&self.t)
            .map(|(row, &t)| pinball_loss(t - linear(params, row), tau))
            .sum::<f64>()
            / self.n as f64
    }

    /// Full-batch subgradient descent keeping the best iterate seen. Each
    /// step moves the parameters a distance `step/√t` along the normalized
    /// subgradient. `params[0]` is the intercept.
    fn fit(&self, tau: f64, epochs: usize, step: f64) -> LinearQuantile {
        let mut params = vec![0.0; self.d + 1];
        let mut sorted: Vec<(f64, f64)> = self.t.iter().map(|&t| (t, 1.0)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        params[0] = weighted_quantile(&sorted, self.n as f64, tau);

        let mut best = params.clone();
        let mut best_loss = self.mean_loss(&params, tau);
        let mut grad = vec![0.0; self.d + 1];
        for epoch in 1..=epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (row, &t) in self.z.chunks_exact(self.d).zip(&self.t) {
                let r = t - linear(&params, row);
                // d/dŷ of ρ_τ(t − ŷ); 0 is a valid subgradient at r = 0
                let g = if r > 0.0 {
                    -tau
                } else if r < 0.0 {
                    1.0 - tau
                } else {
                    0.0
                };
                if g != 0.0 {
                    grad[0] += g;
                    for (gj, zj) in grad[1..].iter_mut().zip(row) {
                        *gj += g * zj;
                    }
                }
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let eta = step / (epoch as f64).sqrt() / norm;
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= eta * g;
            }
            let loss = self.mean_loss(&params, tau);
            if loss < best_loss {
                best_loss = loss;
                best.copy_from_slice(&params);
            }
        }
        self.unstandardize(tau, &best)
    }

    fn unstandardize(&self, tau: f64, params: &[f64]) -> LinearQuantile {
        let slopes: Vec<f64> = params[1..]
            .iter()
            .zip(&self.x_scale)
            .map(|(w, s)| w * self.y_scale / s)
            .collect();
        let shift: f64 = slopes.iter().zip(&self.x_mean).map(|(w, m)| w * m).sum();
        LinearQuantile {
            tau,
            intercept: self.y_mean + self.y_scale * params[0] - shift,
            slopes,
        }
    }
}

fn linear(params: &[f64], row: &[f64]) -> f64 {
    params[0] + params[1..].iter().zip(row).map(|(w, z)| w * z).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;

    fn line_data(n: usize, noise: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, ys): (Vec<Vec<f64>>, Vec<f64>) = (0..n)
            .map(|_| {
                let x: f64 = rng.random();
                let e: f64 = rng.sample(StandardNormal);
                (vec![x], 2.0 * x + 1.0 + noise * e)
            })
            .unzip();
        Dataset::from_rows(rows, ys).unwrap()
    }

    #[test]
    fn pinball_loss_values() {
        assert_eq!(pinball_loss(2.0, 0.9), 2.0 * 0.9);
        assert!((pinball_loss(-2.0, 0.9) - 0.2).abs() < 1e-15);
        assert_eq!(pinball_loss(0.0, 0.3), 0.0);
    }

    #[test]
    fn noiseless_median_line_is_recovered() {
        let ds = line_data(500, 0.0, 1);
        let levels = QuantileLevels::new(0.25, 0.75, true).unwrap();
        let model = LinearPinballModel::fit(&ds, levels, 2000, 0.1).unwrap();
        let med = model.median().unwrap();
        // loss at the generating line is zero, hence a global minimum
        let truth = LinearQuantile {
            tau: 0.5,
            intercept: 1.0,
            slopes: vec![2.0],
        };
        assert_eq!(truth.loss(&ds), 0.0);
        assert!((med.slopes[0] - 2.0).abs() < 0.05, "{med:?}");
        assert!((med.intercept - 1.0).abs() < 0.05, "{med:?}");
        assert!(med.loss(&ds) >= truth.loss(&ds));
    }

    #[test]
    fn constant_feature_is_tolerated() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![3.0, i as f64 / 50.0]).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r[1] * 4.0).collect();
        let ds = Dataset::from_rows(rows, ys).unwrap();
        let levels = QuantileLevels::symmetric(0.2, true).unwrap();
        let model = LinearPinballModel::fit(&ds, levels, 500, 0.1).unwrap();
        let p = model.raw_quantiles(&[3.0, 0.5]);
        assert!(p.lo.is_finite() && p.hi.is_finite());
    }

    #[test]
    fn fitted_loss_beats_random_and_generating_parameters() {
        let ds = line_data(200, 0.5, 7);
        let tau = 0.9;
        let levels = QuantileLevels::new(0.5, tau, false).unwrap();
        let model = LinearPinballModel::fit(&ds, levels, 2000, 0.1).unwrap();
        let fitted = model.upper().loss(&ds);

        // generating parameters shifted to the true τ-quantile of the noise
        let truth = LinearQuantile {
            tau,
            intercept: 1.0 + 0.5 * crate::synthetic::normal_quantile(tau),
            slopes: vec![2.0],
        };
        let n = ds.len() as f64;
        assert!(
            fitted <= truth.loss(&ds) + 1e-6 * n,
            "{fitted} vs {}",
            truth.loss(&ds)
        );

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let cand = LinearQuantile {
                tau,
                intercept: rng.random_range(-5.0..5.0),
                slopes: vec![rng.random_range(-5.0..5.0)],
            };
            assert!(fitted <= cand.loss(&ds));
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let ds = line_data(100, 1.0, 3);
        let levels = QuantileLevels::symmetric(0.1, true).unwrap();
        let a = LinearPinballModel::fit(&ds, levels, 300, 0.1).unwrap();
        let b = LinearPinballModel::fit(&ds, levels, 300, 0.1).unwrap();
        assert_eq!(a.lower(), b.lower());
        assert_eq!(a.upper(), b.upper());
        assert_eq!(a.median(), b.median());
    }
}
