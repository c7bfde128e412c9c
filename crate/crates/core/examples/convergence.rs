//! Quantile-forest CQR width shrinking toward the oracle width as the sample
//! size grows, with coverage held near 1 − α throughout.
//!
//! ```bash
//! cargo run --release --example convergence
//! ```

use cqr::bench::{run_experiment, DataSource, ExperimentConfig};
use cqr::regressors::QuantileRegressorSpec;
use cqr::synthetic::{oracle_expected_width, SyntheticConfig};
use cqr::MethodTag;

fn main() -> cqr::Result<()> {
    let synthetic = SyntheticConfig::default();
    let oracle = oracle_expected_width(&synthetic, 0.1, 200_000)?.value;
    println!("oracle width {oracle:.4}");
    for n in [250, 500, 1000, 2000, 4000] {
        let source = DataSource::Synthetic {
            config: synthetic.clone(),
            n,
            n_test: 5000,
        };
        let mut cfg = ExperimentConfig::new(source, QuantileRegressorSpec::qrf(50, 5, 0)?);
        cfg.methods = vec![MethodTag::Cqr];
        cfg.repetitions = 3;
        let r = run_experiment(&cfg)?;
        let a = &r.aggregates[0];
        println!(
            "n={n:<5} coverage={:.4} width={:.4} (+{:.1}% over oracle)",
            a.coverage_mean,
            a.width_mean.unwrap_or(f64::NAN),
            100.0 * (a.width_mean.unwrap_or(f64::NAN) / oracle - 1.0)
        );
    }
    Ok(())
}
