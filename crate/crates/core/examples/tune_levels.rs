//! Cross-validated choice of the black box's nominal quantile levels before
//! calibration.
//!
//! ```bash
//! cargo run --release --example tune_levels
//! ```

use cqr::bench::evaluate;
use cqr::conformal::{calibrate, DEFAULT_EPS};
use cqr::data::split_train_calib;
use cqr::regressors::{
    self, tune_nominal_levels, QuantileRegressorSpec, TuningConfig, TUNING_GRID,
};
use cqr::synthetic::{generate, SyntheticConfig};
use cqr::MethodTag;

fn main() -> cqr::Result<()> {
    let alpha = 0.1;
    let cfg = SyntheticConfig::with_dim(10, 21)?;
    let data = generate(&cfg, 1200)?;
    let test = generate(&cfg.with_seed(22), 5000)?;
    let (train, calib) = split_train_calib(&data, 0.7, 23)?;
    let spec = QuantileRegressorSpec::knn(None, 0)?;

    let grid: Vec<f64> = TUNING_GRID.iter().map(|m| m * alpha).collect();
    println!("searching beta over {grid:?}");
    for target in [1.0 - 2.0 * alpha, 1.0 - alpha] {
        let tc = TuningConfig {
            target,
            ..TuningConfig::for_alpha(alpha, 24)
        };
        let levels = tune_nominal_levels(&spec, &train, alpha, &tc)?;
        let model = regressors::fit(&spec, &train, levels)?;
        let p = calibrate(MethodTag::Cqr, model, &calib, alpha, DEFAULT_EPS)?;
        let e = evaluate(&p, &test)?;
        println!(
            "target {target:.2}: levels ({:.4}, {:.4}) threshold {:+.4} coverage {:.4} width {:.4}",
            levels.alpha_lo(),
            levels.alpha_up(),
            p.threshold(),
            e.coverage,
            e.avg_width.unwrap_or(f64::INFINITY)
        );
    }
    Ok(())
}
