use rand::seq::SliceRandom;

use super::BinaryFit;
use crate::error::{Error, Result};
use crate::seed::TaskRng;

fn dot_aug(w: &[f64], x: &[f64]) -> f64 {
    let p = x.len();
    w[..p].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[p]
}

fn objectives(x: &[Vec<f64>], y: &[f64], c: &[f64], alpha: &[f64], w: &[f64]) -> (f64, f64) {
    let half_norm = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = x
        .iter()
        .zip(y)
        .zip(c)
        .map(|((xi, yi), ci)| ci * (1.0 - yi * dot_aug(w, xi)).max(0.0))
        .sum();
    (half_norm + loss, alpha.iter().sum::<f64>() - half_norm)
}

/// Dual coordinate descent for the L2-regularized hinge loss
/// `1/2 |w|^2 + sum_i C_i max(0, 1 - y_i (w.x_i + b))`, with the bias
/// handled as an extra regularized feature fixed at 1.
///
/// Stops once the projected-gradient spread is within `tol` and the duality
/// gap is within `1e-6 (1 + |P|)`. Returns `w` with the bias last.
pub(crate) fn fit_binary(
    x: &[Vec<f64>],
    y: &[f64],
    c: &[f64],
    tol: f64,
    max_epochs: usize,
    rng: &mut TaskRng,
) -> Result<(Vec<f64>, BinaryFit)> {
    let n = x.len();
    let p = x.first().map_or(0, Vec::len);
    let mut w = vec![0.0; p + 1];
    let mut alpha = vec![0.0; n];
    let qd: Vec<f64> = x.iter().map(|xi| xi.iter().map(|v| v * v).sum::<f64>() + 1.0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut gap = f64::INFINITY;
    let mut primal = f64::NAN;
    for epoch in 1..=max_epochs {
        order.shuffle(rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = y[i] * dot_aug(&w, &x[i]) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c[i] {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, c[i]);
                let d = (alpha[i] - old) * y[i];
                if d != 0.0 {
                    for (wj, xj) in w[..p].iter_mut().zip(&x[i]) {
                        *wj += d * xj;
                    }
                    w[p] += d;
                }
            }
        }
        if pg_max - pg_min <= tol {
            let (pr, du) = objectives(x, y, c, &alpha, &w);
            primal = pr;
            gap = pr - du;
            if gap <= 1e-6 * (1.0 + pr.abs()) {
                return Ok((
                    w,
                    BinaryFit {
                        iterations: epoch,
                        violation: pg_max - pg_min,
                        primal: pr,
                        dual: du,
                        gap,
                    },
                ));
            }
        }
    }
    if primal.is_nan() {
        let (pr, du) = objectives(x, y, c, &alpha, &w);
        primal = pr;
        gap = pr - du;
    }
    Err(Error::NonConvergence {
        message: format!("linear SVM after {max_epochs} epochs, duality gap {gap:.3e} (primal {primal:.6})"),
        trace: vec![gap],
    })
}
