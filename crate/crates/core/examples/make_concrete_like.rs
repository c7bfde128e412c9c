//! Regenerates `data/concrete_like.csv`, the small tabular dataset bundled
//! for tests and examples.
//!
//! The rows are synthetic: eight mix-design columns and a compressive
//! strength response drawn from a water/binder-ratio strength law with
//! age maturity and noise whose scale grows with the mean. Column names and
//! ranges follow the familiar concrete-strength table (1030 rows).
//!
//! ```bash
//! cargo run --example make_concrete_like -- crates/core/data/concrete_like.csv
//! ```

use std::error::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const ROWS: usize = 1030;
const AGES: [(f64, f64); 8] = [
    (3.0, 0.13),
    (7.0, 0.12),
    (14.0, 0.06),
    (28.0, 0.41),
    (56.0, 0.09),
    (90.0, 0.07),
    (180.0, 0.05),
    (365.0, 0.07),
];

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/data/concrete_like.csv".to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(1030);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record([
        "cement",
        "slag",
        "fly_ash",
        "water",
        "superplasticizer",
        "coarse_aggregate",
        "fine_aggregate",
        "age",
        "strength",
    ])?;
    for _ in 0..ROWS {
        let cement: f64 = rng.random_range(100.0..540.0);
        let slag = if rng.random_bool(0.45) {
            0.0
        } else {
            rng.random_range(10.0..360.0)
        };
        let fly_ash = if rng.random_bool(0.55) {
            0.0
        } else {
            rng.random_range(20.0..200.0)
        };
        let water: f64 = rng.random_range(120.0..247.0);
        let sp = if rng.random_bool(0.37) {
            0.0
        } else {
            rng.random_range(1.0..32.0)
        };
        let coarse = rng.random_range(800.0..1145.0);
        let fine = rng.random_range(590.0..990.0);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let age = AGES
            .iter()
            .find(|(_, p)| {
                acc += p;
                u < acc
            })
            .map_or(365.0, |a| a.0);

        let binder = cement + 0.8 * slag + 0.4 * fly_ash;
        let ratio = water / binder;
        let maturity = ((age + 1.0).ln() / 29f64.ln()).powf(0.6);
        let mean = 95.0 * (-1.6 * ratio).exp() * maturity + 0.3 * sp;
        let noise: f64 = rng.sample(StandardNormal);
        let strength = (mean + noise * (2.0 + 0.12 * mean)).max(2.0);

        w.write_record(
            [
                cement, slag, fly_ash, water, sp, coarse, fine, age, strength,
            ]
            .iter()
            .map(|v| round2(*v).to_string()),
        )?;
    }
    w.flush()?;
    println!("wrote {ROWS} rows to {out}");
    Ok(())
}
