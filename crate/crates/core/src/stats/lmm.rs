use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::DesignMatrices;
use super::inference::{wald_tests, ModelSummary, WaldTable};
use super::optim::NelderMead;
use crate::error::{Error, Result};

const LOG_RATIO_MIN: f64 = -30.0;
const LOG_RATIO_MAX: f64 = 15.0;
const BOUNDARY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Reml,
    Ml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponent {
    pub factor: String,
    pub levels: usize,
    pub variance: f64,
    /// Ratio to the residual variance.
    pub ratio: f64,
    /// The estimate sits on the zero boundary.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmFit {
    pub formula: String,
    pub method: Method,
    pub n: usize,
    pub fixed_names: Vec<String>,
    pub beta: Vec<f64>,
    pub se_beta: Vec<f64>,
    pub sigma2_e: f64,
    pub variance_components: Vec<VarianceComponent>,
    /// Predicted random intercepts, one vector per grouping factor.
    pub blups: Vec<Vec<f64>>,
    /// Minimized objective: −2 × restricted (or full) log-likelihood.
    pub criterion: f64,
    /// Gaussian marginal log-likelihood at the estimated variances, with
    /// the generalized least-squares fixed effects.
    pub ml_loglik: f64,
    pub df: usize,
    pub aic: f64,
    pub iterations: usize,
    pub aic_note: String,
}

impl LmmFit {
    pub fn wald(&self) -> WaldTable {
        wald_tests(&self.fixed_names, &self.beta, &self.se_beta)
    }

    pub fn summary(&self, name: &str) -> ModelSummary {
        ModelSummary {
            name: name.to_string(),
            n: self.n,
            df: self.df as f64,
            loglik: self.ml_loglik,
            aic: self.aic,
        }
    }
}

/// Cross products reused by every criterion evaluation.
struct Cross<'a> {
    d: &'a DesignMatrices,
    ztz: DMatrix<f64>,
    ztx: DMatrix<f64>,
    xtx: DMatrix<f64>,
    zty: DVector<f64>,
    xty: DVector<f64>,
    yty: f64,
    /// Grouping factor of each column of `Z`.
    block_of: Vec<usize>,
}

struct Solved {
    criterion: f64,
    r2: f64,
    u: DVector<f64>,
    beta: DVector<f64>,
    cov_beta_unscaled: DMatrix<f64>,
}

impl<'a> Cross<'a> {
    fn new(d: &'a DesignMatrices) -> Self {
        let block_of = d
            .random_ranges()
            .into_iter()
            .enumerate()
            .flat_map(|(g, r)| r.map(move |_| g))
            .collect();
        Self {
            d,
            ztz: d.ztz(),
            ztx: d.zt_mat(&d.x),
            xtx: d.x.transpose() * &d.x,
            zty: d.zt_vec(&d.y),
            xty: d.x.transpose() * &d.y,
            yty: d.y.dot(&d.y),
            block_of,
        }
    }

    fn lambda(&self, ratios: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.block_of.len(), self.block_of.iter().map(|&g| ratios[g].sqrt()))
    }

    fn solve(&self, ratios: &[f64], method: Method, want_cov: bool) -> Option<Solved> {
        let q = self.block_of.len();
        let p = self.xtx.nrows();
        let n = self.d.n() as f64;
        let lam = self.lambda(ratios);
        let mut a = DMatrix::zeros(q + p, q + p);
        for i in 0..q {
            for j in 0..q {
                a[(i, j)] = lam[i] * self.ztz[(i, j)] * lam[j];
            }
            a[(i, i)] += 1.0;
            for j in 0..p {
                let v = lam[i] * self.ztx[(i, j)];
                a[(i, q + j)] = v;
                a[(q + j, i)] = v;
            }
        }
        a.view_mut((q, q), (p, p)).copy_from(&self.xtx);
        let mut rhs = DVector::zeros(q + p);
        for i in 0..q {
            rhs[i] = lam[i] * self.zty[i];
        }
        rhs.rows_mut(q, p).copy_from(&self.xty);
        let chol = a.cholesky()?;
        let sol = chol.solve(&rhs);
        let r2 = (self.yty - sol.dot(&rhs)).max(f64::MIN_POSITIVE);
        let l = chol.l();
        let log_lz: f64 = (0..q).map(|i| 2.0 * l[(i, i)].ln()).sum();
        let log_rx: f64 = (q..q + p).map(|i| 2.0 * l[(i, i)].ln()).sum();
        let criterion = match method {
            Method::Reml => {
                let dof = n - p as f64;
                log_lz + log_rx + dof * (1.0 + (2.0 * PI * r2 / dof).ln())
            }
            Method::Ml => log_lz + n * (1.0 + (2.0 * PI * r2 / n).ln()),
        };
        let cov_beta_unscaled = if want_cov {
            chol.inverse().view((q, q), (p, p)).into_owned()
        } else {
            DMatrix::zeros(0, 0)
        };
        Some(Solved {
            criterion,
            r2,
            u: sol.rows(0, q).into_owned(),
            beta: sol.rows(q, p).into_owned(),
            cov_beta_unscaled,
        })
    }

    fn criterion(&self, ratios: &[f64], method: Method) -> f64 {
        self.solve(ratios, method, false).map_or(f64::INFINITY, |s| s.criterion)
    }
}

/// REML fit with independent random intercepts per grouping factor.
pub fn fit_lmm_reml(design: &DesignMatrices) -> Result<LmmFit> {
    fit_lmm(design, Method::Reml)
}

/// Fits the mixed model by minimizing the profiled criterion over log
/// variance ratios with Nelder–Mead.
pub fn fit_lmm(design: &DesignMatrices, method: Method) -> Result<LmmFit> {
    let n = design.n();
    let p = design.x.ncols();
    if n <= p {
        return Err(Error::InvalidInput(format!("{n} rows for {p} fixed coefficients")));
    }
    if (design.x.transpose() * &design.x).cholesky().is_none() {
        return Err(Error::Numerical("fixed-effects matrix is rank deficient".into()));
    }
    if !design.smooths.is_empty() {
        return Err(Error::InvalidInput("smooth terms need the additive model fit".into()));
    }
    let cross = Cross::new(design);
    let g = design.random.len();
    let mut ratios = vec![1.0f64; g];
    let mut fixed_zero = vec![false; g];
    let mut iterations = 0;
    loop {
        let free: Vec<usize> = (0..g).filter(|&i| !fixed_zero[i]).collect();
        let expand = |theta: &[f64]| {
            let mut r = vec![0.0; g];
            for (&i, t) in free.iter().zip(theta) {
                r[i] = t.clamp(LOG_RATIO_MIN, LOG_RATIO_MAX).exp();
            }
            r
        };
        let f = |theta: &[f64]| cross.criterion(&expand(theta), method);
        let start: Vec<f64> = free.iter().map(|&i| ratios[i].max(1e-8).ln()).collect();
        let nm = NelderMead::default();
        let mut best = nm.minimize(f, &start);
        iterations += best.iterations;
        if !best.converged {
            let restart: Vec<f64> = best.x.iter().map(|t| t + 0.5).collect();
            let second = nm.minimize(f, &restart);
            iterations += second.iterations;
            if !second.converged {
                let mut trace = best.trace;
                trace.extend(second.trace);
                return Err(Error::NonConvergence {
                    message: format!("variance ratios after {iterations} Nelder–Mead iterations"),
                    trace,
                });
            }
            best = second;
        }
        ratios = expand(&best.x);
        let current = cross.criterion(&ratios, method);
        let mut changed = false;
        for &i in &free {
            let mut trial = ratios.clone();
            trial[i] = 0.0;
            if cross.criterion(&trial, method) <= current + BOUNDARY_SLACK {
                ratios = trial;
                fixed_zero[i] = true;
                changed = true;
                break;
            }
        }
        if !changed {
            break;
        }
    }
    let s = cross
        .solve(&ratios, method, true)
        .ok_or_else(|| Error::Numerical("penalized system is not positive definite".into()))?;
    let sigma2_e = match method {
        Method::Reml => s.r2 / (n - p) as f64,
        Method::Ml => s.r2 / n as f64,
    };
    let se_beta = (0..p).map(|i| (sigma2_e * s.cov_beta_unscaled[(i, i)]).sqrt()).collect();
    let lam = cross.lambda(&ratios);
    let b = lam.component_mul(&s.u);
    let ranges = design.random_ranges();
    let variance_components = design
        .random
        .iter()
        .enumerate()
        .map(|(i, blk)| VarianceComponent {
            factor: blk.factor.clone(),
            levels: blk.levels.len(),
            variance: ratios[i] * sigma2_e,
            ratio: ratios[i],
            boundary: fixed_zero[i],
        })
        .collect::<Vec<_>>();
    let sigma2_g: Vec<f64> = variance_components.iter().map(|c| c.variance).collect();
    let beta: Vec<f64> = s.beta.iter().copied().collect();
    let ml = ml_loglik(design, sigma2_e, &sigma2_g, &beta)?;
    let df = p + g + 1;
    Ok(LmmFit {
        formula: design.formula.to_string(),
        method,
        n,
        fixed_names: design.fixed_names.clone(),
        beta,
        se_beta,
        sigma2_e,
        variance_components,
        blups: ranges.into_iter().map(|r| b.rows(r.start, r.len()).iter().copied().collect()).collect(),
        criterion: s.criterion,
        ml_loglik: ml,
        df,
        aic: 2.0 * df as f64 - 2.0 * ml,
        iterations,
        aic_note: format!(
            "AIC uses the Gaussian marginal log-likelihood at the {} variance estimates with GLS fixed effects",
            match method {
                Method::Reml => "REML",
                Method::Ml => "ML",
            }
        ),
    })
}

/// Exact Gaussian marginal log-likelihood of `y ~ N(Xβ, σ²_e I + Z G Zᵀ)`.
pub fn ml_loglik(design: &DesignMatrices, sigma2_e: f64, sigma2_g: &[f64], beta: &[f64]) -> Result<f64> {
    if !(sigma2_e > 0.0 && sigma2_e.is_finite()) {
        return Err(Error::Numerical(format!("residual variance {sigma2_e} is not positive")));
    }
    if sigma2_g.len() != design.random.len() || beta.len() != design.x.ncols() {
        return Err(Error::InvalidInput("parameter dimensions do not match the design".into()));
    }
    if sigma2_g.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Numerical("random-effect variances must be finite and non-negative".into()));
    }
    let n = design.n() as f64;
    let e = &design.y - &design.x * DVector::from_column_slice(beta);
    let ete = e.dot(&e);
    let lam: Vec<f64> = design
        .random_ranges()
        .into_iter()
        .enumerate()
        .flat_map(|(g, r)| r.map(move |_| (sigma2_g[g] / sigma2_e).sqrt()))
        .collect();
    let q = lam.len();
    let (log_det_m, correction) = if q == 0 {
        (0.0, 0.0)
    } else {
        let ztz = design.ztz();
        let mut m = DMatrix::from_fn(q, q, |i, j| lam[i] * ztz[(i, j)] * lam[j]);
        for i in 0..q {
            m[(i, i)] += 1.0;
        }
        let zte = design.zt_vec(&e);
        let v = DVector::from_fn(q, |i, _| lam[i] * zte[i]);
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Numerical("marginal covariance is not positive definite".into()))?;
        let log_det = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum::<f64>();
        (log_det, v.dot(&chol.solve(&v)))
    };
    let log_det_v = n * sigma2_e.ln() + log_det_m;
    let quad = (ete - correction) / sigma2_e;
    Ok(-0.5 * (n * (2.0 * PI).ln() + log_det_v + quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::design::{assemble_design, FixedInput};
    use crate::stats::parse_formula;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn one_way(y: &[f64], groups: &[&str]) -> DesignMatrices {
        let g: Vec<String> = groups.iter().map(|s| s.to_string()).collect();
        assemble_design(parse_formula("y ~ (1|g)").unwrap(), y, &[], &[], &[("g", &g)]).unwrap()
    }

    #[test]
    fn balanced_anova_closed_form() {
        let d = one_way(&[1.0, 3.0, 5.0, 7.0], &["g1", "g1", "g2", "g2"]);
        let fit = fit_lmm_reml(&d).unwrap();
        assert!((fit.sigma2_e - 2.0).abs() < 1e-6, "{}", fit.sigma2_e);
        assert!((fit.variance_components[0].variance - 7.0).abs() < 1e-6);
        assert!((fit.beta[0] - 4.0).abs() < 1e-9);
        assert!(!fit.variance_components[0].boundary);
        assert_eq!(fit.df, 3);
        assert_eq!(fit.aic, 2.0 * 3.0 - 2.0 * fit.ml_loglik);
    }

    #[test]
    fn balanced_anova_moment_estimators_agree() {
        // 4 groups of 3 with distinct means
        let y = [2.0, 3.1, 4.2, 7.5, 6.1, 8.0, 1.0, -0.5, 0.7, 12.0, 10.4, 11.1];
        let g = ["a", "a", "a", "b", "b", "b", "c", "c", "c", "d", "d", "d"];
        let fit = fit_lmm_reml(&one_way(&y, &g)).unwrap();
        let means: Vec<f64> = y.chunks(3).map(|c| c.iter().sum::<f64>() / 3.0).collect();
        let grand = y.iter().sum::<f64>() / 12.0;
        let msw = y.chunks(3).zip(&means).map(|(c, m)| c.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sum::<f64>() / 8.0;
        let msb = 3.0 * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / 3.0;
        assert!(((fit.sigma2_e - msw) / msw).abs() < 1e-6);
        let sg = (msb - msw) / 3.0;
        assert!(((fit.variance_components[0].variance - sg) / sg).abs() < 1e-6);
    }

    #[test]
    fn single_level_factor_hits_boundary() {
        let d = one_way(&[1.0, 2.5, 0.3, 4.0, 2.2], &["only"; 5]);
        let fit = fit_lmm_reml(&d).unwrap();
        assert!(fit.variance_components[0].boundary);
        assert_eq!(fit.variance_components[0].variance, 0.0);
        let mean = 10.0 / 5.0;
        assert!((fit.beta[0] - mean).abs() < 1e-12);
    }

    #[test]
    fn no_random_terms_is_ols() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.1, 1.9, 3.2, 3.8, 5.0];
        let d = assemble_design(parse_formula("y ~ x").unwrap(), &y, &[FixedInput::Numeric("x", &x)], &[], &[]).unwrap();
        let fit = fit_lmm_reml(&d).unwrap();
        // closed-form simple regression
        let (mx, my) = (3.0, 3.0);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / 10.0;
        assert!((fit.beta[1] - slope).abs() < 1e-12);
        assert!((fit.beta[0] - (my - slope * mx)).abs() < 1e-12);
    }

    #[test]
    fn ml_loglik_hand_values() {
        let d = one_way(&[0.0], &["a"]);
        let v = ml_loglik(&d, 1.0, &[0.0], &[0.0]).unwrap();
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-14);
        assert!(ml_loglik(&d, 0.0, &[0.0], &[0.0]).is_err());
        assert!(ml_loglik(&d, 1.0, &[-1.0], &[0.0]).is_err());
    }

    #[test]
    fn zero_group_variance_is_iid() {
        let y = [0.3, -1.2, 2.2, 0.9, 1.4];
        let d = one_way(&y, &["a", "b", "a", "c", "b"]);
        let (s2, mu) = (1.7, 0.4);
        let iid: f64 = y
            .iter()
            .map(|v| -0.5 * (2.0 * PI * s2).ln() - (v - mu) * (v - mu) / (2.0 * s2))
            .sum();
        assert!((ml_loglik(&d, s2, &[0.0], &[mu]).unwrap() - iid).abs() < 1e-12);
    }

    #[test]
    fn loglik_matches_dense_marginal() {
        let y = [0.3, -1.2, 2.2, 0.9, 1.4, 0.1];
        let g = ["a", "b", "a", "c", "b", "c"];
        let d = one_way(&y, &g);
        let (s2e, s2g, mu) = (0.8, 1.3, 0.5);
        let z = d.z();
        let v = DMatrix::identity(6, 6) * s2e + &z * z.transpose() * s2g;
        let e = DVector::from_iterator(6, y.iter().map(|v| v - mu));
        let chol = v.clone().cholesky().unwrap();
        let dense = -0.5 * (6.0 * (2.0 * PI).ln() + v.determinant().ln() + e.dot(&chol.solve(&e)));
        assert!((ml_loglik(&d, s2e, &[s2g], &[mu]).unwrap() - dense).abs() < 1e-12);
        // relabeling levels
        let g2 = ["z", "y", "z", "x", "y", "x"];
        let d2 = one_way(&y, &g2);
        assert!((ml_loglik(&d2, s2e, &[s2g], &[mu]).unwrap() - dense).abs() < 1e-12);
    }

    #[test]
    fn ml_fit_criterion_is_minus_twice_loglik() {
        let y = [2.0, 3.1, 4.2, 7.5, 6.1, 8.0, 1.0, -0.5, 0.7];
        let g = ["a", "a", "a", "b", "b", "b", "c", "c", "c"];
        let fit = fit_lmm(&one_way(&y, &g), Method::Ml).unwrap();
        assert!((fit.criterion + 2.0 * fit.ml_loglik).abs() < 1e-9);
    }

    #[test]
    fn simulated_two_factor_recovers_truth() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (n_g, per) = (40, 25);
        let ua: Vec<f64> = (0..n_g).map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut rng)).collect();
        let mut y = Vec::new();
        let mut g = Vec::new();
        for (i, u) in ua.iter().enumerate() {
            for _ in 0..per {
                y.push(3.0 + u + Normal::new(0.0, 2.0).unwrap().sample(&mut rng));
                g.push(format!("g{i:02}"));
            }
        }
        let d = assemble_design(parse_formula("y ~ (1|g)").unwrap(), &y, &[], &[], &[("g", &g)]).unwrap();
        let fit = fit_lmm_reml(&d).unwrap();
        assert!((fit.sigma2_e - 4.0).abs() < 0.6, "{}", fit.sigma2_e);
        assert!((fit.variance_components[0].variance - 1.0).abs() < 0.7);
        assert!((fit.beta[0] - 3.0).abs() < 0.6);
    }
}
