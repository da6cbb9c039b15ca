use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::{DesignMatrices, SplineBasis};
use super::inference::{wald_tests, ModelSummary, WaldTable};
use super::optim::golden_section;
use crate::error::{Error, Result};

const LOG10_MIN: f64 = -10.0;
const LOG10_MAX: f64 = 12.0;
const GOLDEN_TOL: f64 = 1e-4;
const CYCLE_TOL: f64 = 1e-3;
const MAX_CYCLES: usize = 20;

/// Smoothing-parameter selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    /// Minimize GCV.
    #[default]
    Auto,
    /// One value per penalized block: smooths first, then random factors.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothFit {
    pub variable: String,
    pub basis: SplineBasis,
    /// First coefficient index of this term.
    pub offset: usize,
    pub lambda: f64,
    pub edf: f64,
}

impl SmoothFit {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFit {
    pub factor: String,
    pub levels: Vec<String>,
    pub offset: usize,
    pub lambda: f64,
    pub edf: f64,
    /// Implied random-intercept variance, `σ̂² / λ`.
    pub variance: f64,
}

/// Penalized Gaussian additive model with identity link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamFit {
    pub formula: String,
    pub link: String,
    pub n: usize,
    pub fixed_names: Vec<String>,
    pub smooths: Vec<SmoothFit>,
    pub random: Vec<RandomFit>,
    /// Parametric, smooth, then random-intercept coefficients.
    pub coefficients: Vec<f64>,
    /// Posterior covariance of `coefficients`.
    pub vp: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub rss: f64,
    pub edf: f64,
    pub gcv: f64,
    pub loglik: f64,
    pub df: f64,
    pub aic: f64,
    pub cycles: usize,
    pub gcv_trace: Vec<f64>,
}

impl GamFit {
    pub fn beta(&self) -> &[f64] {
        &self.coefficients[..self.fixed_names.len()]
    }

    pub fn se_beta(&self) -> Vec<f64> {
        (0..self.fixed_names.len()).map(|i| self.vp[i][i].sqrt()).collect()
    }

    pub fn wald(&self) -> WaldTable {
        wald_tests(&self.fixed_names, self.beta(), &self.se_beta())
    }

    pub fn summary(&self, name: &str) -> ModelSummary {
        ModelSummary {
            name: name.to_string(),
            n: self.n,
            df: self.df,
            loglik: self.loglik,
            aic: self.aic,
        }
    }

    pub fn smooth(&self, covariate: &str) -> Result<&SmoothFit> {
        self.smooths
            .iter()
            .find(|s| s.variable == covariate)
            .ok_or_else(|| Error::InvalidInput(format!("`{covariate}` has no smooth term in this model")))
    }

    /// Centered smooth contribution at arbitrary covariate values.
    pub fn smooth_values(&self, covariate: &str, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.smooth(covariate)?;
        let theta = &self.coefficients[s.offset..s.offset + s.dim()];
        Ok(x.iter()
            .map(|&v| s.basis.row(v).iter().zip(theta).map(|(b, t)| b * t).sum())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialEffect {
    pub covariate: String,
    pub grid: Vec<f64>,
    pub fit: Vec<f64>,
    pub se: Vec<f64>,
    /// Sign of the average slope over the grid: −1, 0 or 1.
    pub slope_sign: i8,
}

/// Evaluates one smooth on an equally spaced grid over its observed range.
pub fn partial_effects(fit: &GamFit, covariate: &str, grid_size: usize) -> Result<PartialEffect> {
    if grid_size < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points".into()));
    }
    let s = fit.smooth(covariate)?;
    let (lo, hi) = s.basis.range;
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| if i + 1 == grid_size { hi } else { lo + (hi - lo) * i as f64 / (grid_size - 1) as f64 })
        .collect();
    let values = fit.smooth_values(covariate, &grid)?;
    let d = s.dim();
    let se = grid
        .iter()
        .map(|&x| {
            let b = s.basis.row(x);
            let mut v = 0.0;
            for i in 0..d {
                for j in 0..d {
                    v += b[i] * fit.vp[s.offset + i][s.offset + j] * b[j];
                }
            }
            v.max(0.0).sqrt()
        })
        .collect();
    let slope = (values[grid_size - 1] - values[0]) / (hi - lo).max(f64::MIN_POSITIVE);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let slope_sign = if slope.abs() * (hi - lo) <= 1e-12 * scale.max(1e-300) {
        0
    } else if slope > 0.0 {
        1
    } else {
        -1
    };
    Ok(PartialEffect {
        covariate: covariate.to_string(),
        grid,
        fit: values,
        se,
        slope_sign,
    })
}

struct Problem {
    n: usize,
    ctc: DMatrix<f64>,
    cty: DVector<f64>,
    yty: f64,
    /// Coefficient range and penalty of each penalized block.
    blocks: Vec<(usize, DMatrix<f64>)>,
    /// Internal penalty scaling, so the search range is comparable across blocks.
    scale: Vec<f64>,
}

struct Eval {
    theta: DVector<f64>,
    m_inv: DMatrix<f64>,
    influence_diag: Vec<f64>,
    rss: f64,
    edf: f64,
    gcv: f64,
}

impl Problem {
    fn new(d: &DesignMatrices) -> Self {
        let n = d.n();
        let pd = d.x.ncols() + d.smooths.iter().map(|s| s.columns.ncols()).sum::<usize>();
        let mut dense = DMatrix::zeros(n, pd);
        dense.columns_mut(0, d.x.ncols()).copy_from(&d.x);
        let mut off = d.x.ncols();
        let mut blocks = Vec::new();
        for s in &d.smooths {
            dense.columns_mut(off, s.columns.ncols()).copy_from(&s.columns);
            blocks.push((off, s.penalty.clone()));
            off += s.columns.ncols();
        }
        let q = d.q();
        for r in d.random_ranges() {
            blocks.push((pd + r.start, DMatrix::identity(r.len(), r.len())));
        }
        let m = pd + q;
        let mut ctc = DMatrix::zeros(m, m);
        ctc.view_mut((0, 0), (pd, pd)).copy_from(&(dense.transpose() * &dense));
        if q > 0 {
            let ztd = d.zt_mat(&dense);
            ctc.view_mut((pd, 0), (q, pd)).copy_from(&ztd);
            ctc.view_mut((0, pd), (pd, q)).copy_from(&ztd.transpose());
            ctc.view_mut((pd, pd), (q, q)).copy_from(&d.ztz());
        }
        let mut cty = DVector::zeros(m);
        cty.rows_mut(0, pd).copy_from(&(dense.transpose() * &d.y));
        if q > 0 {
            cty.rows_mut(pd, q).copy_from(&d.zt_vec(&d.y));
        }
        let scale = blocks
            .iter()
            .map(|(o, s)| {
                let data: f64 = (0..s.nrows()).map(|i| ctc[(o + i, o + i)]).sum();
                let pen = s.trace();
                if pen > 0.0 && data > 0.0 {
                    data / pen
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            n,
            ctc,
            cty,
            yty: d.y.dot(&d.y),
            blocks,
            scale,
        }
    }

    fn lambdas(&self, rho: &[f64]) -> Vec<f64> {
        rho.iter().zip(&self.scale).map(|(r, s)| 10f64.powf(*r) * s).collect()
    }

    fn eval(&self, rho: &[f64]) -> Option<Eval> {
        let mut m = self.ctc.clone();
        for ((off, s), lam) in self.blocks.iter().zip(self.lambdas(rho)) {
            let k = s.nrows();
            let mut view = m.view_mut((*off, *off), (k, k));
            view += s * lam;
        }
        let chol = m.cholesky()?;
        let theta = chol.solve(&self.cty);
        let rss = (self.yty - 2.0 * theta.dot(&self.cty) + theta.dot(&(&self.ctc * &theta))).max(0.0);
        let m_inv = chol.inverse();
        let influence_diag: Vec<f64> = (0..self.ctc.nrows()).map(|i| m_inv.row(i).dot(&self.ctc.column(i).transpose())).collect();
        let edf: f64 = influence_diag.iter().sum();
        let n = self.n as f64;
        let gcv = if n - edf > 0.0 { n * rss / (n - edf).powi(2) } else { f64::INFINITY };
        Some(Eval {
            theta,
            m_inv,
            influence_diag,
            rss,
            edf,
            gcv,
        })
    }

    fn gcv(&self, rho: &[f64]) -> f64 {
        self.eval(rho).map_or(f64::INFINITY, |e| e.gcv)
    }

    /// Cyclic per-block search on log10 λ.
    fn select(&self) -> Result<(Vec<f64>, usize, Vec<f64>)> {
        let nb = self.blocks.len();
        let mut rho = vec![0.0; nb];
        let mut trace = Vec::new();
        if nb == 0 {
            return Ok((rho, 0, trace));
        }
        for cycle in 0..MAX_CYCLES {
            let old = rho.clone();
            for j in 0..nb {
                let at = |t: f64| {
                    let mut r = rho.clone();
                    r[j] = t;
                    self.gcv(&r)
                };
                let (lo, hi) = if cycle == 0 {
                    let mut best = (LOG10_MIN, f64::INFINITY);
                    let mut t = LOG10_MIN;
                    while t <= LOG10_MAX {
                        let v = at(t);
                        if v < best.1 {
                            best = (t, v);
                        }
                        t += 1.0;
                    }
                    (best.0 - 1.0, best.0 + 1.0)
                } else {
                    (rho[j] - 2.0, rho[j] + 2.0)
                };
                let (t, v) = golden_section(at, lo.max(LOG10_MIN), hi.min(LOG10_MAX), GOLDEN_TOL);
                if v <= at(rho[j]) {
                    rho[j] = t;
                }
            }
            trace.push(self.gcv(&rho));
            let change = rho.iter().zip(&old).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < CYCLE_TOL {
                return Ok((rho, cycle + 1, trace));
            }
        }
        Err(Error::NonConvergence {
            message: format!("smoothing parameters after {MAX_CYCLES} cycles"),
            trace,
        })
    }
}

/// Penalized least squares with GCV-selected or fixed smoothing parameters.
pub fn fit_gam(design: &DesignMatrices, lambda: &LambdaChoice) -> Result<GamFit> {
    let problem = Problem::new(design);
    let nb = problem.blocks.len();
    let (rho, cycles, gcv_trace) = match lambda {
        LambdaChoice::Auto => problem.select()?,
        LambdaChoice::Fixed(values) => {
            if values.len() != nb {
                return Err(Error::InvalidInput(format!(
                    "{} smoothing parameters given for {nb} penalized terms",
                    values.len()
                )));
            }
            if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidInput("smoothing parameters must be positive".into()));
            }
            let rho = values.iter().zip(&problem.scale).map(|(v, s)| (v / s).log10()).collect();
            (rho, 0, vec![])
        }
    };
    let e = problem
        .eval(&rho)
        .ok_or_else(|| Error::Numerical("penalized system is singular".into()))?;
    let n = design.n();
    let nf = n as f64;
    if nf - e.edf <= 0.0 {
        return Err(Error::Numerical(format!("effective degrees of freedom {:.3} leave no residual", e.edf)));
    }
    let sigma2 = e.rss / (nf - e.edf);
    let lambdas = problem.lambdas(&rho);
    let block_edf: Vec<f64> = problem
        .blocks
        .iter()
        .map(|(o, s)| e.influence_diag[*o..*o + s.nrows()].iter().sum())
        .collect();
    let smooths: Vec<SmoothFit> = design
        .smooths
        .iter()
        .enumerate()
        .map(|(j, s)| SmoothFit {
            variable: s.basis.variable.clone(),
            basis: s.basis.clone(),
            offset: problem.blocks[j].0,
            lambda: lambdas[j],
            edf: block_edf[j],
        })
        .collect();
    let ns = smooths.len();
    let random = design
        .random
        .iter()
        .enumerate()
        .map(|(i, b)| RandomFit {
            factor: b.factor.clone(),
            levels: b.levels.clone(),
            offset: problem.blocks[ns + i].0,
            lambda: lambdas[ns + i],
            edf: block_edf[ns + i],
            variance: sigma2 / lambdas[ns + i],
        })
        .collect();
    let loglik = -nf / 2.0 * ((2.0 * PI * e.rss / nf).ln() + 1.0);
    let df = e.edf + 1.0;
    let m = e.m_inv.nrows();
    Ok(GamFit {
        formula: design.formula.to_string(),
        link: "identity".into(),
        n,
        fixed_names: design.fixed_names.clone(),
        smooths,
        random,
        coefficients: e.theta.iter().copied().collect(),
        vp: (0..m).map(|i| (0..m).map(|j| sigma2 * e.m_inv[(i, j)]).collect()).collect(),
        sigma2,
        rss: e.rss,
        edf: e.edf,
        gcv: e.gcv,
        loglik,
        df,
        aic: 2.0 * df - 2.0 * loglik,
        cycles,
        gcv_trace,
    })
}

/// GCV score at explicit smoothing parameters, for diagnostics.
pub fn gcv_at(design: &DesignMatrices, lambdas: &[f64]) -> Result<f64> {
    let problem = Problem::new(design);
    if lambdas.len() != problem.blocks.len() {
        return Err(Error::InvalidInput("wrong number of smoothing parameters".into()));
    }
    let rho: Vec<f64> = lambdas.iter().zip(&problem.scale).map(|(v, s)| (v / s).log10()).collect();
    problem
        .eval(&rho)
        .map(|e| e.gcv)
        .ok_or_else(|| Error::Numerical("penalized system is singular".into()))
}
