//! Heteroscedastic synthetic benchmark with known conditional quantiles.
//!
//! `X ~ Unif([0,1]^d)` and
//!
//! ```text
//! Y = f(β'X) + ε·√(1 + (β'X)²),   f(t) = 2·sin(πt) + πt,   ε ~ N(0, 1)
//! ```
//!
//! so the conditional τ-quantile is `f(β'x) + z_τ·√(1 + (β'x)²)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{check_alpha, Dataset, Sample};
use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 100;
const ACTIVE_COORDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    beta: Vec<f64>,
    seed: u64,
}

impl SyntheticConfig {
    pub fn new(beta: Vec<f64>, seed: u64) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidConfig("beta must be non-empty".into()));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("beta"));
        }
        if beta.iter().all(|&b| b == 0.0) {
            return Err(Error::InvalidConfig(
                "beta must have at least one nonzero entry".into(),
            ));
        }
        Ok(Self { beta, seed })
    }

    /// `d` features, `β = (1,1,1,1,1,0,…,0)` truncated to `d`.
    pub fn with_dim(d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("d must be positive".into()));
        }
        let beta = (0..d)
            .map(|j| if j < ACTIVE_COORDS { 1.0 } else { 0.0 })
            .collect();
        Self::new(beta, seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            beta: self.beta.clone(),
            seed,
        }
    }

    pub fn d(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The single index `β'x`.
    pub fn index(&self, x: &[f64]) -> f64 {
        self.beta.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::with_dim(DEFAULT_DIM, 0).expect("default dimension is valid")
    }
}

/// Location term `f(t) = 2·sin(πt) + πt`.
pub fn location(t: f64) -> f64 {
    2.0 * (PI * t).sin() + PI * t
}

/// Noise scale `√(1 + t²)`.
pub fn noise_scale(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// Response for covariates `x` and a given noise draw.
pub fn response(cfg: &SyntheticConfig, x: &[f64], eps: f64) -> f64 {
    let t = cfg.index(x);
    location(t) + eps * noise_scale(t)
}

/// Draws `n` samples. Each sample consumes `d` uniforms then one normal from
/// a ChaCha8 stream seeded with `cfg.seed()`.
pub fn generate(cfg: &SyntheticConfig, n: usize) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::InsufficientSamples("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.d();
    let samples = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let eps: f64 = rng.sample(StandardNormal);
            let y = response(cfg, &x, eps);
            Sample::new(x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, d)
}

/// True conditional τ-quantile of `Y | X = x`.
pub fn oracle_quantile(cfg: &SyntheticConfig, x: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidLevels(format!(
            "tau {tau} must lie in (0, 1)"
        )));
    }
    if x.len() != cfg.d() {
        return Err(Error::DimensionMismatch {
            expected: cfg.d(),
            got: x.len(),
        });
    }
    let t = cfg.index(x);
    Ok(location(t) + normal_quantile(tau) * noise_scale(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `E[q_{1−α/2}(X) − q_{α/2}(X)] = 2·E[√(1+(β'X)²)]·z_{1−α/2}`.
///
/// Only coordinates with nonzero `β` are drawn, so the stream differs from
/// [`generate`].
pub fn oracle_expected_width(
    cfg: &SyntheticConfig,
    alpha: f64,
    mc_samples: usize,
) -> Result<MonteCarloEstimate> {
    let active: Vec<f64> = cfg.beta.iter().copied().filter(|&b| b != 0.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    expected_width_with(alpha, mc_samples, || {
        active.iter().map(|b| b * rng.random::<f64>()).sum()
    })
}

/// Width estimator over an arbitrary sampler of the index `β'X`.
pub(crate) fn expected_width_with(
    alpha: f64,
    mc_samples: usize,
    mut draw_index: impl FnMut() -> f64,
) -> Result<MonteCarloEstimate> {
    check_alpha(alpha)?;
    if mc_samples < 1 {
        return Err(Error::InsufficientSamples(
            "mc_samples must be at least 1".into(),
        ));
    }
    let factor = 2.0 * normal_quantile(1.0 - alpha / 2.0);
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..mc_samples {
        let w = factor * noise_scale(draw_index());
        let delta = w - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (w - mean);
    }
    let var = if mc_samples > 1 {
        m2 / (mc_samples - 1) as f64
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        value: mean,
        std_error: (var / mc_samples as f64).sqrt(),
        samples: mc_samples,
    })
}

/// Standard normal quantile function, algorithm AS 241 (PPND16).
///
/// Relative accuracy about 1e-16 over `(0, 1)`. Returns ±∞ at 0 and 1 and NaN
/// outside `[0, 1]`.
#[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2509.080_928_730_122_7 + 33_430.575_583_588_13) * r
            + 67_265.770_927_008_7)
            * r
            + 45_921.953_931_549_87)
            * r
            + 13_731.693_765_509_461)
            * r
            + 1_971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((r * 5_226.495_278_852_546 + 28_729.085_735_721_943) * r
            + 39_307.895_800_092_71)
            * r
            + 21_213.794_301_586_597)
            * r
            + 5_394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((r * 1.050_750_071_644_416_8e-9 + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((r * 2.044_263_103_389_939_8e-15 + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_887_9)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ(z) by composite Simpson on the density over [−12, z].
    fn normal_cdf_quadrature(z: f64) -> f64 {
        let a = -12.0;
        let n = 200_000;
        let h = (z - a) / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = pdf(a) + pdf(z);
        for i in 1..n {
            let t = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(t);
        }
        s * h / 3.0
    }

    #[test]
    fn normal_quantile_inverts_quadrature_cdf() {
        for &p in &[
            1e-10, 1e-4, 0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.975, 0.999,
        ] {
            let z = normal_quantile(p);
            let back = normal_cdf_quadrature(z);
            assert!(
                (back - p).abs() < 1e-9 * p.max(1e-3),
                "p={p} z={z} back={back}"
            );
        }
    }

    #[test]
    fn normal_quantile_symmetry_and_edges() {
        assert_eq!(normal_quantile(0.5), 0.0);
        for &p in &[0.01, 0.2, 0.4] {
            assert!((normal_quantile(p) + normal_quantile(1.0 - p)).abs() < 1e-14);
        }
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(normal_quantile(1.0), f64::INFINITY);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn forced_noise_responses() {
        let cfg = SyntheticConfig::with_dim(5, 0).unwrap();
        let x = [0.2; 5]; // β'x = 1
        assert!((response(&cfg, &x, 0.0) - PI).abs() < 1e-12);
        let x = [0.1; 5]; // β'x = 0.5
        assert!((response(&cfg, &x, 0.0) - (2.0 + PI / 2.0)).abs() < 1e-12);
        assert!((2.0 + PI / 2.0 - 3.57080).abs() < 1e-5);
    }

    #[test]
    fn oracle_quantile_examples() {
        let cfg = SyntheticConfig::default();
        let zero = vec![0.0; 100];
        let q = oracle_quantile(&cfg, &zero, 0.95).unwrap();
        assert!((q - 1.644_853_626_951_472_2).abs() < 1e-9);
        assert_eq!(oracle_quantile(&cfg, &zero, 0.5).unwrap(), 0.0);
        assert!(oracle_quantile(&cfg, &zero, 1.0).is_err());
        assert!(oracle_quantile(&cfg, &zero, 0.0).is_err());
        assert!(oracle_quantile(&cfg, &[0.0; 3], 0.5).is_err());

        let ds = generate(&cfg.with_seed(3), 20).unwrap();
        for s in ds.samples() {
            let t = cfg.index(s.x());
            assert!((oracle_quantile(&cfg, s.x(), 0.5).unwrap() - location(t)).abs() < 1e-12);
            let band = oracle_quantile(&cfg, s.x(), 0.95).unwrap()
                - oracle_quantile(&cfg, s.x(), 0.05).unwrap();
            let expect = 2.0 * normal_quantile(0.95) * noise_scale(t);
            assert!((band - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_quantile_strictly_increasing_in_tau() {
        let cfg = SyntheticConfig::default();
        let ds = generate(&cfg, 5).unwrap();
        for s in ds.samples() {
            let qs: Vec<f64> = (1..100)
                .map(|i| oracle_quantile(&cfg, s.x(), i as f64 / 100.0).unwrap())
                .collect();
            assert!(qs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn config_invariants() {
        assert!(SyntheticConfig::new(vec![0.0], 0).is_err());
        assert!(SyntheticConfig::new(vec![], 0).is_err());
        assert!(SyntheticConfig::with_dim(0, 0).is_err());
        let c = SyntheticConfig::default();
        assert_eq!(c.d(), 100);
        assert_eq!(c.beta().iter().sum::<f64>(), 5.0);
        assert!(generate(&c, 0).is_err());
    }

    #[test]
    fn degenerate_index_width_closed_form() {
        let est = expected_width_with(0.1, 1000, || 0.0).unwrap();
        assert!((est.value - 3.289_707_253_902_944).abs() < 1e-9);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn generation_is_reproducible() {
        let cfg = SyntheticConfig::with_dim(7, 42).unwrap();
        let a = generate(&cfg, 50).unwrap();
        let b = generate(&cfg, 50).unwrap();
        assert_eq!(a, b);
        let c = generate(&cfg.with_seed(43), 50).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn index_mean_is_two_and_a_half() {
        let cfg = SyntheticConfig::with_dim(5, 11).unwrap();
        let ds = generate(&cfg, 100_000).unwrap();
        let mean = ds.samples().iter().map(|s| cfg.index(s.x())).sum::<f64>() / 1e5;
        assert!((mean - 2.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn oracle_band_has_conditional_coverage() {
        let cfg = SyntheticConfig::default();
        let ds = generate(&cfg.with_seed(5), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        for s in ds.samples() {
            let lo = oracle_quantile(&cfg, s.x(), 0.05).unwrap();
            let hi = oracle_quantile(&cfg, s.x(), 0.95).unwrap();
            let hits = (0..n)
                .filter(|_| {
                    let y = response(&cfg, s.x(), rng.sample(StandardNormal));
                    lo <= y && y <= hi
                })
                .count();
            let cov = hits as f64 / n as f64;
            let se = (0.9 * 0.1 / n as f64).sqrt();
            assert!((cov - 0.9).abs() <= 3.0 * se, "coverage {cov}");
        }
    }
}
