use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pearson correlation; `None` when either column is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("columns of length {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("correlation needs at least 2 rows".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// `None` marks an entry involving a constant column.
    pub r: Vec<Vec<Option<f64>>>,
    pub constant: Vec<String>,
    pub n: usize,
}

/// Pairwise Pearson matrix. The lower triangle is copied from the upper, and
/// the diagonal is exactly 1.
pub fn pearson_matrix(columns: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    let m = columns.len();
    let n = columns.first().map_or(0, |c| c.1.len());
    if n < 2 {
        return Err(Error::InvalidInput("correlation needs at least 2 rows".into()));
    }
    let mut r = vec![vec![None; m]; m];
    for i in 0..m {
        r[i][i] = Some(1.0);
        for j in i + 1..m {
            let v = pearson(&columns[i].1, &columns[j].1)?;
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    let constant = columns
        .iter()
        .filter(|(_, v)| v.iter().all(|x| *x == v[0]))
        .map(|(name, _)| name.clone())
        .collect();
    Ok(CorrelationMatrix {
        names: columns.iter().map(|c| c.0.clone()).collect(),
        r,
        constant,
        n,
    })
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.r[i][j]
    }

    /// TSV with a header row; undefined entries are written as `NA`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("variable");
        for n in &self.names {
            s.push('\t');
            s.push_str(n);
        }
        s.push('\n');
        for (name, row) in self.names.iter().zip(&self.r) {
            s.push_str(name);
            for v in row {
                s.push('\t');
                match v {
                    Some(v) => s.push_str(&format!("{v:.6}")),
                    None => s.push_str("NA"),
                }
            }
            s.push('\n');
        }
        s
    }
}
