use crate::domain::QuantileLevels;
use crate::error::{Error, Result};
use crate::synthetic::{self, SyntheticConfig};

use super::{QuantileModel, RawQuantiles};

/// True conditional quantiles of the synthetic model; ignores training data.
#[derive(Debug, Clone)]
pub struct OracleModel {
    cfg: SyntheticConfig,
    z_lo: f64,
    z_up: f64,
    median: bool,
}

impl OracleModel {
    pub fn new(cfg: SyntheticConfig, d: usize, levels: QuantileLevels) -> Result<Self> {
        if d != cfg.d() {
            return Err(Error::DimensionMismatch {
                expected: cfg.d(),
                got: d,
            });
        }
        Ok(Self {
            cfg,
            z_lo: synthetic::normal_quantile(levels.alpha_lo()),
            z_up: synthetic::normal_quantile(levels.alpha_up()),
            median: levels.has_median(),
        })
    }
}

impl QuantileModel for OracleModel {
    fn raw_quantiles(&self, x: &[f64]) -> RawQuantiles {
        let t = self.cfg.index(x);
        let loc = synthetic::location(t);
        let scale = synthetic::noise_scale(t);
        RawQuantiles {
            lo: loc + self.z_lo * scale,
            hi: loc + self.z_up * scale,
            median: self.median.then_some(loc),
        }
    }
}
