use std::collections::HashMap;

use super::BinaryFit;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

pub(crate) fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-gamma * d).exp()
}

/// Least-recently-used cache of kernel rows `K(x_i, .)`.
pub(crate) struct KernelCache<'a> {
    x: &'a [Vec<f64>],
    gamma: f64,
    capacity: usize,
    rows: HashMap<usize, (Vec<f64>, u64)>,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    pub(crate) fn new(x: &'a [Vec<f64>], gamma: f64, bytes: usize) -> Self {
        let per_row = (x.len() * 8).max(1);
        Self {
            x,
            gamma,
            capacity: (bytes / per_row).max(2),
            rows: HashMap::new(),
            clock: 0,
        }
    }

    fn ensure(&mut self, i: usize) {
        self.clock += 1;
        if let Some(e) = self.rows.get_mut(&i) {
            e.1 = self.clock;
            return;
        }
        if self.rows.len() >= self.capacity {
            let oldest = self.rows.iter().min_by_key(|(_, (_, t))| *t).map(|(&k, _)| k).unwrap();
            self.rows.remove(&oldest);
        }
        let xi = &self.x[i];
        let row = self.x.iter().map(|xj| rbf(xi, xj, self.gamma)).collect();
        self.rows.insert(i, (row, self.clock));
    }

    /// Rows `i` and `j`, both resident.
    pub(crate) fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i);
        self.ensure(j);
        (&self.rows[&i].0, &self.rows[&j].0)
    }

    pub(crate) fn row(&mut self, i: usize) -> &[f64] {
        self.ensure(i);
        &self.rows[&i].0
    }
}

/// SMO with second-order working-set selection for
/// `min 1/2 a'Qa - sum a` s.t. `y'a = 0`, `0 <= a_i <= C_i`,
/// `Q_ij = y_i y_j K_ij`. Returns `(alpha, rho)`; the decision value is
/// `sum_i a_i y_i K(x_i, x) - rho`.
pub(crate) fn fit_binary(
    cache: &mut KernelCache<'_>,
    y: &[f64],
    c: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, BinaryFit)> {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let is_upper = |a: &[f64], t: usize| a[t] >= c[t];
    let is_lower = |a: &[f64], t: usize| a[t] <= 0.0;
    let mut iter = 0;
    let mut violation;
    loop {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !is_upper(&alpha, t) && -g[t] >= gmax {
                    gmax = -g[t];
                    i_sel = Some(t);
                }
            } else if !is_lower(&alpha, t) && g[t] >= gmax {
                gmax = g[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            let ki = cache.row(i);
            let kii = ki[i];
            let mut best = f64::INFINITY;
            for t in 0..n {
                let (diff, in_low, grad) = if y[t] > 0.0 {
                    (gmax + g[t], !is_lower(&alpha, t), g[t])
                } else {
                    (gmax - g[t], !is_upper(&alpha, t), -g[t])
                };
                if in_low {
                    gmax2 = gmax2.max(grad);
                }
                if in_low && diff > 0.0 {
                    let quad = kii + 1.0 - 2.0 * ki[t];
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        violation = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if violation < tol {
            break;
        }
        if iter >= max_iter {
            let fit = summary(&alpha, &g, y, c, 0.0, iter, violation);
            return Err(Error::NonConvergence {
                message: format!("rbf SVM after {max_iter} iterations, KKT violation {violation:.3e}"),
                trace: vec![fit.gap],
            });
        }
        iter += 1;

        let (ki, kj) = cache.pair(i, j);
        let (kii, kjj, kij) = (ki[i], kj[j], ki[j]);
        let (ci, cj) = (c[i], c[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        // Q_ij = y_i y_j K_ij
        if y[i] != y[j] {
            let quad = kii + kjj - 2.0 * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = kii + kjj - 2.0 * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            g[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    let mut n_free = 0usize;
    let mut sum_free = 0.0;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * g[t];
        if is_upper(&alpha, t) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(&alpha, t) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        match (ub.is_finite(), lb.is_finite()) {
            (true, true) => (ub + lb) / 2.0,
            (true, false) => ub,
            (false, true) => lb,
            (false, false) => 0.0,
        }
    };
    let fit = summary(&alpha, &g, y, c, rho, iter, violation.max(0.0));
    Ok((alpha, rho, fit))
}

/// Primal/dual objectives from the gradient `G = Q a - 1`.
fn summary(alpha: &[f64], g: &[f64], y: &[f64], c: &[f64], rho: f64, iterations: usize, violation: f64) -> BinaryFit {
    let quad: f64 = alpha.iter().zip(g).map(|(a, gi)| a * (gi + 1.0)).sum();
    let dual = alpha.iter().sum::<f64>() - 0.5 * quad;
    let loss: f64 = (0..y.len())
        .map(|t| c[t] * (1.0 - (g[t] + 1.0 - y[t] * rho)).max(0.0))
        .sum();
    let primal = 0.5 * quad + loss;
    BinaryFit {
        iterations,
        violation,
        primal,
        dual,
        gap: primal - dual,
    }
}
