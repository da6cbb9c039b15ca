use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::formula::ModelFormula;
use crate::error::{Error, Result};
use crate::features::FeatureTable;

pub const DEFAULT_BASIS: usize = 10;
const DEGREE: usize = 3;

/// Cubic B-spline basis on equally spaced knots with a sum-to-zero
/// constraint: the raw basis columns are centered on their observed means
/// and the last column is dropped, leaving `k - 1` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    pub variable: String,
    pub k: usize,
    pub knots: Vec<f64>,
    pub col_means: Vec<f64>,
    pub range: (f64, f64),
}

impl SplineBasis {
    pub fn new(variable: &str, x: &[f64], k: usize) -> Result<Self> {
        if k < DEGREE + 1 {
            return Err(Error::InvalidInput(format!(
                "s({variable}): basis size {k} is below the cubic minimum of 4"
            )));
        }
        let mut distinct = x.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < k {
            return Err(Error::InvalidInput(format!(
                "s({variable}): {} distinct values but basis size {k}; use s({variable}, k={}) or a linear term",
                distinct.len(),
                distinct.len().max(DEGREE + 1)
            )));
        }
        let (lo, hi) = (distinct[0], *distinct.last().unwrap());
        let h = (hi - lo) / (k - DEGREE) as f64;
        let knots = (0..k + DEGREE + 1)
            .map(|i| lo + (i as f64 - DEGREE as f64) * h)
            .collect();
        let mut b = Self {
            variable: variable.to_string(),
            k,
            knots,
            col_means: vec![0.0; k],
            range: (lo, hi),
        };
        let mut means = vec![0.0; k];
        for &v in x {
            for (m, r) in means.iter_mut().zip(b.raw(v)) {
                *m += r;
            }
        }
        means.iter_mut().for_each(|m| *m /= x.len() as f64);
        b.col_means = means;
        Ok(b)
    }

    /// Unconstrained basis values `B_0(x) .. B_{k-1}(x)`.
    pub fn raw(&self, x: f64) -> Vec<f64> {
        let t = &self.knots;
        let k = self.k;
        // knot span m with t[m] <= x < t[m+1], limited to the data range
        let h = t[DEGREE + 1] - t[DEGREE];
        let mut m = if h > 0.0 {
            DEGREE + ((x - t[DEGREE]) / h).floor().max(0.0) as usize
        } else {
            DEGREE
        };
        m = m.min(k - 1);
        let mut n = [0.0; DEGREE + 1];
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        n[0] = 1.0;
        for j in 1..=DEGREE {
            left[j] = x - t[m + 1 - j];
            right[j] = t[m + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        let mut out = vec![0.0; k];
        for (r, v) in n.iter().enumerate() {
            out[m - DEGREE + r] = *v;
        }
        out
    }

    /// Constrained row of `k - 1` values.
    pub fn row(&self, x: f64) -> Vec<f64> {
        let raw = self.raw(x);
        (0..self.k - 1).map(|j| raw[j] - self.col_means[j]).collect()
    }

    pub fn dim(&self) -> usize {
        self.k - 1
    }

    /// Second-order difference penalty restricted to the kept columns.
    pub fn penalty(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut d = DMatrix::zeros(k - 2, k);
        for i in 0..k - 2 {
            d[(i, i)] = 1.0;
            d[(i, i + 1)] = -2.0;
            d[(i, i + 2)] = 1.0;
        }
        let s = d.transpose() * d;
        s.view((0, 0), (k - 1, k - 1)).into_owned()
    }
}

/// Indicator structure of one grouping factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBlock {
    pub factor: String,
    pub levels: Vec<String>,
    /// Level index of each row.
    pub index: Vec<usize>,
}

impl RandomBlock {
    pub fn new(factor: &str, values: &[String]) -> Self {
        let mut levels = values.to_vec();
        levels.sort();
        levels.dedup();
        let index = values.iter().map(|v| levels.binary_search(v).unwrap()).collect();
        Self {
            factor: factor.to_string(),
            levels,
            index,
        }
    }

    pub fn z(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.index.len(), self.levels.len());
        for (i, &l) in self.index.iter().enumerate() {
            z[(i, l)] = 1.0;
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBlock {
    pub basis: SplineBasis,
    pub columns: DMatrix<f64>,
    pub penalty: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub formula: ModelFormula,
    pub y: DVector<f64>,
    /// Fixed effects, intercept first.
    pub x: DMatrix<f64>,
    pub fixed_names: Vec<String>,
    pub random: Vec<RandomBlock>,
    pub smooths: Vec<SmoothBlock>,
}

impl DesignMatrices {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// All random-effect indicator columns side by side.
    pub fn z(&self) -> DMatrix<f64> {
        let q: usize = self.random.iter().map(|b| b.levels.len()).sum();
        let mut z = DMatrix::zeros(self.n(), q);
        let mut off = 0;
        for b in &self.random {
            for (i, &l) in b.index.iter().enumerate() {
                z[(i, off + l)] = 1.0;
            }
            off += b.levels.len();
        }
        z
    }

    pub fn q(&self) -> usize {
        self.random.iter().map(|b| b.levels.len()).sum()
    }

    fn random_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.random.len());
        let mut acc = 0;
        for b in &self.random {
            off.push(acc);
            acc += b.levels.len();
        }
        off
    }

    /// `Zᵀv` without forming `Z`.
    pub fn zt_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.q());
        for (b, off) in self.random.iter().zip(self.random_offsets()) {
            for (i, &l) in b.index.iter().enumerate() {
                out[off + l] += v[i];
            }
        }
        out
    }

    /// `ZᵀM` for a dense `n × c` matrix.
    pub fn zt_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.q(), m.ncols());
        for (b, off) in self.random.iter().zip(self.random_offsets()) {
            for (i, &l) in b.index.iter().enumerate() {
                for j in 0..m.ncols() {
                    out[(off + l, j)] += m[(i, j)];
                }
            }
        }
        out
    }

    pub fn ztz(&self) -> DMatrix<f64> {
        let q = self.q();
        let offs = self.random_offsets();
        let mut out = DMatrix::zeros(q, q);
        for i in 0..self.n() {
            for (a, oa) in self.random.iter().zip(&offs) {
                for (b, ob) in self.random.iter().zip(&offs) {
                    out[(oa + a.index[i], ob + b.index[i])] += 1.0;
                }
            }
        }
        out
    }

    /// Column ranges of each random block within `Z`.
    pub fn random_ranges(&self) -> Vec<std::ops::Range<usize>> {
        self.random
            .iter()
            .zip(self.random_offsets())
            .map(|(b, o)| o..o + b.levels.len())
            .collect()
    }
}

/// A fixed-effect input column.
pub enum FixedInput<'a> {
    Numeric(&'a str, &'a [f64]),
    /// Expanded to treatment contrasts against the first sorted level.
    Categorical(&'a str, &'a [String]),
}

/// Assembles design matrices from raw columns.
pub fn assemble_design(
    formula: ModelFormula,
    y: &[f64],
    fixed: &[FixedInput<'_>],
    smooth: &[(&str, &[f64], usize)],
    random: &[(&str, &[String])],
) -> Result<DesignMatrices> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyInput("no rows for the model".into()));
    }
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut fixed_names = vec!["(Intercept)".to_string()];
    for f in fixed {
        match f {
            FixedInput::Numeric(name, v) => {
                check_len(name, v.len(), n)?;
                cols.push(v.to_vec());
                fixed_names.push(name.to_string());
            }
            FixedInput::Categorical(name, v) => {
                check_len(name, v.len(), n)?;
                let block = RandomBlock::new(name, v);
                for (l, level) in block.levels.iter().enumerate().skip(1) {
                    cols.push(block.index.iter().map(|&i| (i == l) as usize as f64).collect());
                    fixed_names.push(format!("{name}[{level}]"));
                }
            }
        }
    }
    let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let mut smooths = Vec::with_capacity(smooth.len());
    for &(name, v, k) in smooth {
        check_len(name, v.len(), n)?;
        let basis = SplineBasis::new(name, v, k)?;
        let rows: Vec<Vec<f64>> = v.iter().map(|&xi| basis.row(xi)).collect();
        let columns = DMatrix::from_fn(n, basis.dim(), |i, j| rows[i][j]);
        let penalty = basis.penalty();
        smooths.push(SmoothBlock { basis, columns, penalty });
    }
    let mut blocks = Vec::with_capacity(random.len());
    for &(name, v) in random {
        check_len(name, v.len(), n)?;
        blocks.push(RandomBlock::new(name, v));
    }
    Ok(DesignMatrices {
        formula,
        y: DVector::from_column_slice(y),
        x,
        fixed_names,
        random: blocks,
        smooths,
    })
}

fn check_len(name: &str, got: usize, n: usize) -> Result<()> {
    if got == n {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("column `{name}` has {got} rows, expected {n}")))
    }
}

/// Resolves formula names against a feature table.
pub fn build_design(formula: &ModelFormula, table: &FeatureTable) -> Result<DesignMatrices> {
    let y = table
        .numeric(&formula.response)
        .ok_or_else(|| Error::UnknownFeature(formula.response.clone()))?;
    let mut fixed = Vec::with_capacity(formula.fixed.len());
    for name in &formula.fixed {
        if let Some(v) = table.numeric(name) {
            fixed.push(FixedInput::Numeric(name, v));
        } else if let Some(c) = table.categorical(name) {
            fixed.push(FixedInput::Categorical(name, &c.values));
        } else {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }
    let mut smooth = Vec::with_capacity(formula.smooth.len());
    for s in &formula.smooth {
        let v = table.numeric(&s.variable).ok_or_else(|| {
            if table.categorical(&s.variable).is_some() {
                Error::InvalidInput(format!("s({}) needs a numeric column; use bs=\"re\" for a factor", s.variable))
            } else {
                Error::UnknownFeature(s.variable.clone())
            }
        })?;
        smooth.push((s.variable.as_str(), v, s.k.unwrap_or(DEFAULT_BASIS)));
    }
    let mut random = Vec::with_capacity(formula.random.len());
    for g in &formula.random {
        let c = table.categorical(g).ok_or_else(|| {
            if table.numeric(g).is_some() {
                Error::InvalidInput(format!("grouping factor `{g}` must be categorical"))
            } else {
                Error::UnknownFeature(g.clone())
            }
        })?;
        random.push((g.as_str(), c.values.as_slice()));
    }
    assemble_design(formula.clone(), y, &fixed, &smooth, &random)
}
