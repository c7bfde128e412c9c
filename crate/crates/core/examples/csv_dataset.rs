//! Load the bundled tabular dataset, split it, standardize the response by
//! its mean absolute training value and build CQR-r intervals in the
//! original units.
//!
//! ```bash
//! cargo run --release --example csv_dataset
//! ```

use cqr::bench::evaluate;
use cqr::conformal::{calibrate, DEFAULT_EPS};
use cqr::data::{load_csv_with_header, split, standardize_response, SplitConfig};
use cqr::regressors::{self, QuantileRegressorSpec};
use cqr::{MethodTag, QuantileLevels};

fn main() -> cqr::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/concrete_like.csv");
    let loaded = load_csv_with_header(path, "strength")?;
    println!(
        "{} rows, features {:?}",
        loaded.dataset.len(),
        loaded.feature_names
    );

    let (train, calib, test) = split(&loaded.dataset, &SplitConfig::new(0.8, 0.2, 42)?)?;
    let (train, calib, test, scale) = standardize_response(&train, &calib, &test)?;
    println!(
        "split {}/{}/{}, response scale {:.3}",
        train.len(),
        calib.len(),
        test.len(),
        scale.scale()
    );

    let alpha = 0.1;
    let spec = QuantileRegressorSpec::qrf(100, 5, 1)?;
    let model = regressors::fit(&spec, &train, QuantileLevels::symmetric(alpha, false)?)?;
    let predictor = calibrate(MethodTag::CqrR, model, &calib, alpha, DEFAULT_EPS)?;
    let e = evaluate(&predictor, &test)?;
    println!(
        "CQR-r coverage {:.4}, standardized width {:.4}",
        e.coverage,
        e.avg_width.unwrap_or(f64::NAN)
    );

    for s in test.samples().iter().take(5) {
        let iv = predictor.predict_interval(s.x())?;
        println!(
            "strength {:7.2}  interval [{:7.2}, {:7.2}] MPa",
            scale.restore(s.y()),
            scale.restore(iv.lo()),
            scale.restore(iv.hi())
        );
    }
    Ok(())
}
