//! Every supported black box on the same split, conformalized with CQR.
//!
//! ```bash
//! cargo run --release --example compare_regressors
//! ```

use cqr::bench::evaluate;
use cqr::conformal::{calibrate, DEFAULT_EPS};
use cqr::data::split_train_calib;
use cqr::regressors::{self, QuantileRegressorSpec};
use cqr::synthetic::{generate, SyntheticConfig};
use cqr::{MethodTag, QuantileLevels};

fn main() -> cqr::Result<()> {
    let alpha = 0.1;
    let cfg = SyntheticConfig::with_dim(10, 11)?;
    let data = generate(&cfg, 1500)?;
    let test = generate(&cfg.with_seed(12), 5000)?;
    let (train, calib) = split_train_calib(&data, 0.7, 13)?;
    let levels = QuantileLevels::symmetric(alpha, false)?;

    let specs = [
        ("linear", QuantileRegressorSpec::linear(2000, 0.1, 0)?),
        ("qrf", QuantileRegressorSpec::qrf(100, 5, 0)?),
        ("knn", QuantileRegressorSpec::knn(None, 0)?),
        ("oracle", QuantileRegressorSpec::oracle(cfg)),
    ];
    println!(
        "{:<8} {:>10} {:>9} {:>9}",
        "model", "threshold", "coverage", "width"
    );
    for (name, spec) in specs {
        let model = regressors::fit(&spec, &train, levels)?;
        let p = calibrate(MethodTag::Cqr, model, &calib, alpha, DEFAULT_EPS)?;
        let e = evaluate(&p, &test)?;
        println!(
            "{name:<8} {:>10.4} {:>9.4} {:>9.4}",
            p.threshold(),
            e.coverage,
            e.avg_width.unwrap_or(f64::INFINITY)
        );
    }
    Ok(())
}
