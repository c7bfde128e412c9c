//! The synthetic benchmark's exact conditional quantiles: the Monte Carlo
//! expected width of the oracle band and the coverage of the oracle band
//! after conformalization.
//!
//! ```bash
//! cargo run --release --example oracle_width
//! ```

use cqr::bench::evaluate;
use cqr::conformal::{calibrate, DEFAULT_EPS};
use cqr::regressors::{self, QuantileRegressorSpec};
use cqr::synthetic::{self, generate, oracle_expected_width, oracle_quantile, SyntheticConfig};
use cqr::{MethodTag, QuantileLevels};

fn main() -> cqr::Result<()> {
    let alpha = 0.1;
    let cfg = SyntheticConfig::default();

    let est = oracle_expected_width(&cfg, alpha, 1_000_000)?;
    println!(
        "E[oracle width] = {:.4} ± {:.4} ({} draws)",
        est.value, est.std_error, est.samples
    );

    let x = vec![0.5; cfg.d()];
    println!(
        "at x = 0.5·1: index {:.2}, q05 = {:.4}, q50 = {:.4}, q95 = {:.4}",
        cfg.index(&x),
        oracle_quantile(&cfg, &x, 0.05)?,
        oracle_quantile(&cfg, &x, 0.5)?,
        oracle_quantile(&cfg, &x, 0.95)?,
    );
    println!(
        "f(2.5) = {:.4}, noise sd = {:.4}",
        synthetic::location(2.5),
        synthetic::noise_scale(2.5)
    );

    let calib = generate(&cfg.with_seed(1), 2000)?;
    let test = generate(&cfg.with_seed(2), 10_000)?;
    let levels = QuantileLevels::symmetric(alpha, true)?;
    let train = generate(&cfg.with_seed(3), 1)?;
    let model = regressors::fit(&QuantileRegressorSpec::oracle(cfg), &train, levels)?;
    let model = std::sync::Arc::new(model);
    for method in MethodTag::ALL {
        let p = calibrate(method, model.clone(), &calib, alpha, DEFAULT_EPS)?;
        let e = evaluate(&p, &test)?;
        println!(
            "{method:<6} threshold={:+.4} coverage={:.4} width={:.4}",
            p.threshold(),
            e.coverage,
            e.avg_width.unwrap_or(f64::INFINITY)
        );
    }
    Ok(())
}
