use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const WALD_CAVEAT: &str =
    "p-values use a normal approximation to the Wald statistic; no small-sample degrees-of-freedom correction";

/// AIC differences below this are read as similar support.
pub const SIMILAR_SUPPORT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldRow {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldTable {
    pub rows: Vec<WaldRow>,
    pub caveat: String,
}

/// Two-sided normal p-value for `|z|`.
pub fn normal_p(z: f64) -> f64 {
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).min(1.0)
}

pub fn wald_tests(names: &[String], estimates: &[f64], se: &[f64]) -> WaldTable {
    let rows = names
        .iter()
        .zip(estimates)
        .zip(se)
        .map(|((term, &estimate), &se)| {
            let t = if estimate == 0.0 { 0.0 } else { estimate / se };
            WaldRow {
                term: term.clone(),
                estimate,
                se,
                t,
                p: if t.is_nan() { f64::NAN } else { normal_p(t) },
            }
        })
        .collect();
    WaldTable {
        rows,
        caveat: WALD_CAVEAT.into(),
    }
}

impl WaldTable {
    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|r| r.term.len()).max().unwrap_or(4).max(4);
        let mut s = format!("{:<w$}  {:>12}  {:>10}  {:>8}  {:>10}\n", "term", "estimate", "se", "t", "p");
        for r in &self.rows {
            s.push_str(&format!(
                "{:<w$}  {:>12.6}  {:>10.6}  {:>8.3}  {:>10.3e}\n",
                r.term, r.estimate, r.se, r.t, r.p
            ));
        }
        s.push_str(&format!("note: {}\n", self.caveat));
        s
    }
}

/// What model comparison needs from a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub n: usize,
    pub df: f64,
    pub loglik: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub df: f64,
    pub loglik: f64,
    pub aic: f64,
    /// AIC minus the best AIC.
    pub delta: f64,
    /// Within 2 AIC units of the best model.
    pub similar_to_best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarPair {
    pub a: String,
    pub b: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicComparison {
    pub n: usize,
    pub rows: Vec<ComparisonRow>,
    /// Every pair whose AIC values differ by less than 2.
    pub similar_support: Vec<SimilarPair>,
}

/// Ranks fits by ascending AIC; ties keep input order.
pub fn compare_models(fits: &[ModelSummary]) -> Result<AicComparison> {
    let first = fits.first().ok_or_else(|| Error::EmptyInput("no models to compare".into()))?;
    if let Some(bad) = fits.iter().find(|f| f.n != first.n) {
        return Err(Error::NotComparable(format!(
            "`{}` was fit on {} rows but `{}` on {}",
            first.name, first.n, bad.name, bad.n
        )));
    }
    let mut order: Vec<&ModelSummary> = fits.iter().collect();
    order.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    let best = order[0].aic;
    let rows = order
        .iter()
        .map(|f| ComparisonRow {
            name: f.name.clone(),
            df: f.df,
            loglik: f.loglik,
            aic: f.aic,
            delta: f.aic - best,
            similar_to_best: f.aic - best < SIMILAR_SUPPORT,
        })
        .collect();
    let mut similar_support = Vec::new();
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            let delta = b.aic - a.aic;
            if delta < SIMILAR_SUPPORT {
                similar_support.push(SimilarPair {
                    a: a.name.clone(),
                    b: b.name.clone(),
                    delta,
                });
            }
        }
    }
    Ok(AicComparison {
        n: first.n,
        rows,
        similar_support,
    })
}

impl AicComparison {
    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
        let mut s = format!("n = {}\n{:<w$}  {:>8}  {:>16}  {:>16}  {:>10}\n", self.n, "model", "df", "logLik", "AIC", "dAIC");
        for r in &self.rows {
            s.push_str(&format!(
                "{:<w$}  {:>8.2}  {:>16.4}  {:>16.4}  {:>10.4}{}\n",
                r.name,
                r.df,
                r.loglik,
                r.aic,
                r.delta,
                if r.delta > 0.0 && r.similar_to_best { "  similar support" } else { "" }
            ));
        }
        for p in &self.similar_support {
            s.push_str(&format!("similar support: {} vs {} (dAIC {:.4})\n", p.a, p.b, p.delta));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(name: &str, n: usize, aic: f64) -> ModelSummary {
        ModelSummary {
            name: name.into(),
            n,
            df: 1.0,
            loglik: (2.0 - aic) / 2.0,
            aic,
        }
    }

    #[test]
    fn wald_reference_points() {
        let t = wald_tests(&["a".into(), "b".into()], &[0.0, 1.959963984540054 * 0.3], &[0.5, 0.3]);
        assert_eq!(t.rows[0].p, 1.0);
        assert!((t.rows[1].p - 0.05).abs() < 1e-9, "{}", t.rows[1].p);
        assert!(t.render().contains("normal approximation"));
    }

    #[test]
    fn ranking_and_similar_support() {
        let c = compare_models(&[m("big", 10, 101.5), m("small", 10, 100.0), m("far", 10, 110.0)]).unwrap();
        let names: Vec<&str> = c.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["small", "big", "far"]);
        assert_eq!(c.rows[1].delta, 1.5);
        assert!(c.rows[1].similar_to_best && !c.rows[2].similar_to_best);
        assert_eq!(c.similar_support.len(), 1);
        assert!(c.render().contains("similar support"));
    }

    #[test]
    fn differing_rows_rejected() {
        let e = compare_models(&[m("a", 10, 1.0), m("b", 11, 2.0)]).unwrap_err();
        assert_eq!(e.code(), "E_NOT_COMPARABLE");
    }
}
