//! One-vs-rest support vector classification.

mod kernel;
mod linear;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{argmax, check_xy, class_counts};
use crate::error::{Error, Result};
use crate::seed;

const CACHE_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "String")]
pub enum Kernel {
    Linear,
    Rbf,
}

impl FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Kernel::Linear),
            "rbf" => Ok(Kernel::Rbf),
            "poly" | "polynomial" => Err(Error::Unsupported(
                "polynomial SVM kernel; use `linear` or `rbf`".into(),
            )),
            other => Err(Error::InvalidInput(format!("unknown kernel `{other}`"))),
        }
    }
}

impl TryFrom<String> for Kernel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Linear => "linear",
            Kernel::Rbf => "rbf",
        })
    }
}

/// RBF width: `scale` is `1 / (p Var(X))`, `auto` is `1 / p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "GammaRepr", try_from = "GammaRepr")]
pub enum Gamma {
    Scale,
    Auto,
    Value(f64),
}

impl FromStr for Gamma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "scale" => Ok(Gamma::Scale),
            "auto" => Ok(Gamma::Auto),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|g| *g > 0.0 && g.is_finite())
                .map(Gamma::Value)
                .ok_or_else(|| Error::InvalidInput(format!("gamma `{v}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Number(f64),
    Text(String),
}

impl From<Gamma> for GammaRepr {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::Value(v) => GammaRepr::Number(v),
            other => GammaRepr::Text(other.to_string()),
        }
    }
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = Error;
    fn try_from(r: GammaRepr) -> Result<Self> {
        match r {
            GammaRepr::Number(v) => v.to_string().parse(),
            GammaRepr::Text(s) => s.parse(),
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Scale => f.write_str("scale"),
            Gamma::Auto => f.write_str("auto"),
            Gamma::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Gamma {
    pub fn resolve(self, x: &[Vec<f64>]) -> f64 {
        let p = x.first().map_or(1, Vec::len).max(1) as f64;
        match self {
            Gamma::Value(g) => g,
            Gamma::Auto => 1.0 / p,
            Gamma::Scale => {
                let n = (x.len() as f64 * p).max(1.0);
                let mean = x.iter().flatten().sum::<f64>() / n;
                let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    1.0 / (p * var)
                } else {
                    1.0
                }
            }
        }
    }
}

/// `Balanced` multiplies `C` for a sample of class `k` by `n / (g n_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "String")]
pub enum ClassWeight {
    None,
    Balanced,
}

impl FromStr for ClassWeight {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" | "None" | "" => Ok(ClassWeight::None),
            "balanced" => Ok(ClassWeight::Balanced),
            v => Err(Error::InvalidInput(format!("class weight `{v}`"))),
        }
    }
}

impl TryFrom<String> for ClassWeight {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for ClassWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassWeight::None => "none",
            ClassWeight::Balanced => "balanced",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    pub gamma: Gamma,
    pub class_weight: ClassWeight,
    /// Tolerance on the KKT violation.
    pub tol: f64,
    /// Epoch cap for the linear solver; the rbf solver allows
    /// `max_epochs * n` pair updates.
    pub max_epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            kernel: Kernel::Linear,
            c: 1.0,
            gamma: Gamma::Scale,
            class_weight: ClassWeight::None,
            tol: 1e-4,
            max_epochs: 100_000,
        }
    }
}

/// Convergence record of one binary subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryFit {
    pub iterations: usize,
    pub violation: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SvmWeights {
    /// One `(w, b)` per class.
    Linear { w: Vec<Vec<f64>>, b: Vec<f64> },
    /// `coef[k][s]` is `alpha_s y_s` of class `k`'s subproblem for support
    /// vector `s`.
    Rbf {
        gamma: f64,
        support_vectors: Vec<Vec<f64>>,
        coef: Vec<Vec<f64>>,
        rho: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub n_features: usize,
    pub n_classes: usize,
    pub weights: SvmWeights,
    pub convergence: Vec<BinaryFit>,
}

fn sample_costs(y: &[usize], n_classes: usize, params: &SvmParams) -> Vec<f64> {
    match params.class_weight {
        ClassWeight::None => vec![params.c; y.len()],
        ClassWeight::Balanced => {
            let counts = class_counts(y, n_classes);
            let n = y.len() as f64;
            y.iter()
                .map(|&k| params.c * n / (n_classes as f64 * counts[k] as f64))
                .collect()
        }
    }
}

pub fn fit_svm(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &SvmParams, seed: u64) -> Result<SvmModel> {
    let p = check_xy(x, y)?;
    let present = class_counts(y, n_classes).iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InvalidInput("SVM needs at least 2 classes".into()));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidInput(format!("C = {}", params.c)));
    }
    let costs = sample_costs(y, n_classes, params);
    let signs = |k: usize| -> Vec<f64> { y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect() };
    let mut convergence = Vec::with_capacity(n_classes);
    let weights = match params.kernel {
        Kernel::Linear => {
            let mut ws = Vec::with_capacity(n_classes);
            let mut bs = Vec::with_capacity(n_classes);
            for k in 0..n_classes {
                let mut rng = seed::task_rng(seed, k as u64);
                let (mut w, fit) = linear::fit_binary(x, &signs(k), &costs, params.tol, params.max_epochs, &mut rng)?;
                bs.push(w.pop().unwrap());
                ws.push(w);
                convergence.push(fit);
            }
            SvmWeights::Linear { w: ws, b: bs }
        }
        Kernel::Rbf => {
            let gamma = params.gamma.resolve(x);
            let mut cache = kernel::KernelCache::new(x, gamma, CACHE_BYTES);
            let max_iter = params.max_epochs.saturating_mul(x.len().max(1));
            let mut alphas = Vec::with_capacity(n_classes);
            let mut rho = Vec::with_capacity(n_classes);
            for k in 0..n_classes {
                let ys = signs(k);
                let (a, r, fit) = kernel::fit_binary(&mut cache, &ys, &costs, params.tol, max_iter)?;
                alphas.push(a.iter().zip(&ys).map(|(a, s)| a * s).collect::<Vec<f64>>());
                rho.push(r);
                convergence.push(fit);
            }
            let sv: Vec<usize> = (0..x.len()).filter(|&i| alphas.iter().any(|a| a[i] != 0.0)).collect();
            SvmWeights::Rbf {
                gamma,
                support_vectors: sv.iter().map(|&i| x[i].clone()).collect(),
                coef: alphas.iter().map(|a| sv.iter().map(|&i| a[i]).collect()).collect(),
                rho,
            }
        }
    };
    Ok(SvmModel {
        params: *params,
        n_features: p,
        n_classes,
        weights,
        convergence,
    })
}

impl SvmModel {
    /// One-vs-rest decision values, one per class.
    pub fn decision_function(&self, row: &[f64]) -> Vec<f64> {
        match &self.weights {
            SvmWeights::Linear { w, b } => w
                .iter()
                .zip(b)
                .map(|(wk, bk)| wk.iter().zip(row).map(|(a, v)| a * v).sum::<f64>() + bk)
                .collect(),
            SvmWeights::Rbf {
                gamma,
                support_vectors,
                coef,
                rho,
            } => {
                let k: Vec<f64> = support_vectors.iter().map(|s| kernel::rbf(s, row, *gamma)).collect();
                coef.iter()
                    .zip(rho)
                    .map(|(ck, r)| ck.iter().zip(&k).map(|(a, kv)| a * kv).sum::<f64>() - r)
                    .collect()
            }
        }
    }

    /// Largest decision value; ties go to the smallest class index.
    pub fn predict_one(&self, row: &[f64]) -> usize {
        argmax(&self.decision_function(row))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn max_gap(&self) -> f64 {
        self.convergence.iter().map(|c| c.gap).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accuracy(m: &SvmModel, x: &[Vec<f64>], y: &[usize]) -> f64 {
        m.predict(x).iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    fn xor() -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn two_point_max_margin() {
        let params = SvmParams { c: 1e6, ..Default::default() };
        let m = fit_svm(&[vec![-1.0], vec![1.0]], &[0, 1], 2, &params, 0).unwrap();
        let SvmWeights::Linear { w, b } = &m.weights else { panic!() };
        assert!((w[1][0] - 1.0).abs() < 1e-4, "{w:?}");
        assert!(b[1].abs() < 1e-4);
        assert!((w[0][0] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn duality_gap_certificate() {
        let x: Vec<Vec<f64>> = (0..80).map(|i| vec![(i as f64 * 0.7).sin() * 2.0, (i as f64 * 1.3).cos()]).collect();
        let y: Vec<usize> = x.iter().map(|r| (r[0] + 0.3 * r[1] > 0.1) as usize).collect();
        let m = fit_svm(&x, &y, 2, &SvmParams::default(), 1).unwrap();
        for c in &m.convergence {
            assert!(c.gap <= 1e-6 * (1.0 + c.primal.abs()));
            assert!(c.gap >= -1e-9);
        }
    }

    #[test]
    fn xor_linear_vs_rbf() {
        let (x, y) = xor();
        let lin = fit_svm(&x, &y, 2, &SvmParams::default(), 0).unwrap();
        assert!(accuracy(&lin, &x, &y) <= 0.75);
        let rbf = SvmParams {
            kernel: Kernel::Rbf,
            c: 10.0,
            gamma: Gamma::Value(1.0),
            ..Default::default()
        };
        let m = fit_svm(&x, &y, 2, &rbf, 0).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        let SvmWeights::Rbf { coef, .. } = &m.weights else { panic!() };
        assert!(coef.iter().flatten().all(|a| a.abs() <= 10.0 + 1e-12));
    }

    #[test]
    fn duplicated_rows_keep_separable_boundary() {
        let x = vec![vec![-2.0, 0.5], vec![-1.0, -0.5], vec![1.5, 0.0], vec![2.0, 1.0]];
        let y = vec![0, 0, 1, 1];
        let params = SvmParams { c: 1e5, ..Default::default() };
        let a = fit_svm(&x, &y, 2, &params, 0).unwrap();
        let xx: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let yy: Vec<usize> = y.iter().chain(&y).copied().collect();
        let b = fit_svm(&xx, &yy, 2, &params, 0).unwrap();
        let (SvmWeights::Linear { w: wa, b: ba }, SvmWeights::Linear { w: wb, b: bb }) = (&a.weights, &b.weights) else {
            panic!()
        };
        for k in 0..2 {
            assert!((ba[k] - bb[k]).abs() < 1e-3);
            for j in 0..2 {
                assert!((wa[k][j] - wb[k][j]).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn rbf_three_classes_and_balanced_weights() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..90 {
            let k = if i < 60 { 0 } else if i < 80 { 1 } else { 2 };
            let t = i as f64 * 0.37;
            x.push(vec![k as f64 * 3.0 + t.sin() * 0.5, t.cos() * 0.5]);
            y.push(k);
        }
        for cw in [ClassWeight::None, ClassWeight::Balanced] {
            let p = SvmParams {
                kernel: Kernel::Rbf,
                class_weight: cw,
                ..Default::default()
            };
            let m = fit_svm(&x, &y, 3, &p, 0).unwrap();
            assert_eq!(accuracy(&m, &x, &y), 1.0);
        }
    }

    #[test]
    fn poly_kernel_rejected() {
        let e = "poly".parse::<Kernel>().unwrap_err();
        assert_eq!(e.code(), "E_UNSUPPORTED");
    }
}
