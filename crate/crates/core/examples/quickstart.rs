//! Fit a quantile forest, conformalize it with each score and check the
//! coverage and width on fresh data.
//!
//! ```bash
//! cargo run --release --example quickstart
//! ```

use cqr::bench::evaluate;
use cqr::conformal::{self, DEFAULT_EPS};
use cqr::data::split_train_calib;
use cqr::regressors::{self, QuantileRegressorSpec};
use cqr::synthetic::{generate, SyntheticConfig};
use cqr::{MethodTag, QuantileLevels};

fn main() -> cqr::Result<()> {
    let alpha = 0.1;
    let cfg = SyntheticConfig::with_dim(20, 3)?;
    let data = generate(&cfg, 2000)?;
    let test = generate(&cfg.with_seed(4), 5000)?;
    let (train, calib) = split_train_calib(&data, 0.75, 5)?;

    let spec = QuantileRegressorSpec::qrf(100, 5, 6)?;
    let levels = QuantileLevels::symmetric(alpha, true)?;
    let model = std::sync::Arc::new(regressors::fit(&spec, &train, levels)?);

    println!(
        "train={} calib={} test={}",
        train.len(),
        calib.len(),
        test.len()
    );
    for method in MethodTag::ALL {
        let predictor = conformal::calibrate(method, model.clone(), &calib, alpha, DEFAULT_EPS)?;
        let eval = evaluate(&predictor, &test)?;
        println!(
            "{method:<6} threshold={:+.4} coverage={:.4} width={:.4}",
            predictor.threshold(),
            eval.coverage,
            eval.avg_width.unwrap_or(f64::INFINITY),
        );
    }

    let x = test.samples()[0].x();
    let predictor = conformal::calibrate(MethodTag::CqrR, model, &calib, alpha, DEFAULT_EPS)?;
    let iv = predictor.predict_interval(x)?;
    println!(
        "first test point: [{:.3}, {:.3}], y = {:.3}",
        iv.lo(),
        iv.hi(),
        test.samples()[0].y()
    );
    Ok(())
}
