use std::sync::Arc;

use cqr::bench::{evaluate, run_experiment, DataSource, ExperimentConfig, Tuning};
use cqr::conformal::{calibrate, DEFAULT_EPS};
use cqr::data::{load_csv, split, standardize_response, write_csv, SplitConfig};
use cqr::regressors::{self, QuantileRegressorSpec};
use cqr::synthetic::{generate, SyntheticConfig};
use cqr::{MethodTag, QuantileLevels};

#[test]
fn oracle_band_covers_at_nominal_rate() {
    let cfg = SyntheticConfig::with_dim(5, 1).unwrap();
    let source = DataSource::Synthetic {
        config: cfg.clone(),
        n: 4000,
        n_test: 10_000,
    };
    let mut exp = ExperimentConfig::new(source, QuantileRegressorSpec::oracle(cfg));
    exp.repetitions = 3;
    let result = run_experiment(&exp).unwrap();
    for a in &result.aggregates {
        assert!((0.88..=0.92).contains(&a.coverage_mean), "{a:?}");
    }
}

#[test]
fn experiment_is_reproducible_and_tuning_is_recorded() {
    let cfg = SyntheticConfig::with_dim(6, 2).unwrap();
    let source = DataSource::Synthetic {
        config: cfg,
        n: 400,
        n_test: 400,
    };
    let mut exp = ExperimentConfig::new(source, QuantileRegressorSpec::knn(None, 0).unwrap());
    exp.repetitions = 2;
    exp.tuning = Tuning::Target(0.8);
    let a = run_experiment(&exp).unwrap();
    let b = run_experiment(&exp).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let grid: Vec<f64> = regressors::TUNING_GRID
        .iter()
        .map(|m| m * 0.1 / 2.0)
        .collect();
    for r in &a.results {
        assert!(
            grid.iter().any(|g| (g - r.alpha_lo).abs() < 1e-12),
            "{}",
            r.alpha_lo
        );
        assert!((r.alpha_lo + r.alpha_up - 1.0).abs() < 1e-12);
    }
}

#[test]
fn csv_round_trip_feeds_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let cfg = SyntheticConfig::with_dim(4, 3).unwrap();
    let ds = generate(&cfg, 600).unwrap();
    let names: Vec<String> = (0..4).map(|j| format!("x{j}")).collect();
    write_csv(&ds, &path, &names, "y").unwrap();
    let back = load_csv(&path, "y").unwrap();
    assert_eq!(back, ds);

    let (train, calib, test) = split(&back, &SplitConfig::new(0.6, 0.25, 4).unwrap()).unwrap();
    let (train, calib, test, scale) = standardize_response(&train, &calib, &test).unwrap();
    let levels = QuantileLevels::symmetric(0.1, true).unwrap();
    let model = Arc::new(
        regressors::fit(
            &QuantileRegressorSpec::qrf(30, 5, 0).unwrap(),
            &train,
            levels,
        )
        .unwrap(),
    );
    for method in MethodTag::ALL {
        let p = calibrate(method, model.clone(), &calib, 0.1, DEFAULT_EPS).unwrap();
        let e = evaluate(&p, &test).unwrap();
        assert!(e.coverage > 0.75, "{method} {e:?}");
        let iv = p.predict_interval(test.samples()[0].x()).unwrap();
        assert!(scale.restore(iv.lo()) <= scale.restore(iv.hi()));
    }
}
