//! The three conformity scores, their intervals and the conformal quantile,
//! on hand-written numbers.
//!
//! ```bash
//! cargo run --example conformity_scores
//! ```

use cqr::conformal::{interval, score, score_cqr, score_cqr_m, score_cqr_r, DEFAULT_EPS};
use cqr::domain::conformal_rank;
use cqr::regressors::{QuantilePrediction, RawQuantiles};
use cqr::{empirical_conformal_quantile, MethodTag};

fn main() -> cqr::Result<()> {
    let eps = DEFAULT_EPS;
    println!(
        "CQR   score of y=5 for [1, 3]        = {}",
        score_cqr(5.0, 1.0, 3.0)?
    );
    println!(
        "CQR-m score of y=5 for [1, 2, 3]     = {:.6}",
        score_cqr_m(5.0, 1.0, 2.0, 3.0, eps)?
    );
    println!(
        "CQR-r score of y=0 for [1, 3]        = {:.6}",
        score_cqr_r(0.0, 1.0, 3.0, eps)?
    );

    let scores = [0.3, -0.1, 0.8, 0.05, 0.4, -0.2, 0.6, 0.1, 0.2];
    let alpha = 0.2;
    let q = empirical_conformal_quantile(&scores, alpha)?;
    println!(
        "m={} alpha={alpha}: rank {} -> threshold {q}",
        scores.len(),
        conformal_rank(scores.len(), alpha)
    );
    println!(
        "m=5 alpha=0.1: rank {} -> threshold {}",
        conformal_rank(5, 0.1),
        empirical_conformal_quantile(&scores[..5], 0.1)?
    );

    // Crossed estimates are swapped and the median clamped into the pair.
    let p = QuantilePrediction::from_raw(RawQuantiles {
        lo: 4.0,
        hi: 2.0,
        median: Some(7.0),
    });
    println!(
        "repaired prediction: lo={} median={:?} hi={}",
        p.lo, p.median, p.hi
    );

    for method in MethodTag::ALL {
        let iv = interval(method, &p, q, eps)?;
        let s = score(method, 3.5, &p, eps)?;
        println!(
            "{method:<6} interval [{:.4}, {:.4}]  score(y=3.5) = {s:+.4}",
            iv.lo(),
            iv.hi()
        );
    }
    let shrunk = interval(MethodTag::Cqr, &p, -5.0, eps)?;
    println!(
        "strongly negative threshold collapses to [{}, {}]",
        shrunk.lo(),
        shrunk.hi()
    );
    Ok(())
}
