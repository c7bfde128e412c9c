//! Repeated-split experiment over the training-fraction grid, reporting the
//! narrowest method at each γ and writing the full result as JSON.
//!
//! ```bash
//! cargo run --release --example gamma_sweep -- /tmp/sweep.json
//! ```

use cqr::bench::{emit, run_experiment, DataSource, ExperimentConfig, OutputFormat, GAMMA_GRID};
use cqr::regressors::QuantileRegressorSpec;
use cqr::synthetic::SyntheticConfig;

fn main() -> cqr::Result<()> {
    let synthetic = SyntheticConfig::with_dim(10, 0)?;
    let source = DataSource::Synthetic {
        config: synthetic,
        n: 1000,
        n_test: 5000,
    };
    let mut cfg = ExperimentConfig::new(source, QuantileRegressorSpec::knn(None, 0)?);
    cfg.gammas = GAMMA_GRID.to_vec();
    cfg.repetitions = 5;

    let result = run_experiment(&cfg)?;
    println!(
        "{:<6} {:<6} {:>9} {:>9}",
        "gamma", "method", "coverage", "width"
    );
    for a in &result.aggregates {
        println!(
            "{:<6} {:<6} {:>9.4} {:>9}",
            a.gamma,
            a.method.name(),
            a.coverage_mean,
            a.width_mean.map_or("inf".into(), |w| format!("{w:.4}"))
        );
    }
    for (gamma, method, width) in result.narrowest_by_gamma() {
        println!("narrowest at gamma={gamma}: {method} ({width:.4})");
    }
    if let Some(path) = std::env::args().nth(1) {
        emit(&result, OutputFormat::Json, &path)?;
        println!("wrote {path}");
    }
    Ok(())
}
