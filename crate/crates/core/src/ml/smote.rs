use rand::Rng;
use serde::Serialize;

use super::class_counts;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoteOutcome {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// `(class, k used)` for classes too small for the requested neighbours.
    pub reduced_k: Vec<(usize, usize)>,
    pub synthetic: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Synthetic minority oversampling.
///
/// Each synthetic row is `x + u (x_nn - x)` for a random class member `x`,
/// one of its `k` nearest same-class neighbours `x_nn` (Euclidean), and
/// `u ~ U[0, 1)`. Classes are grown to `target_counts` (default: the largest
/// class count). Originals come first, synthetic rows are appended.
pub fn smote(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    k_neighbors: usize,
    target_counts: Option<&[usize]>,
    seed: u64,
) -> Result<SmoteOutcome> {
    if k_neighbors == 0 {
        return Err(Error::InvalidInput("k_neighbors must be >= 1".into()));
    }
    let counts = class_counts(y, n_classes);
    let majority = counts.iter().copied().max().unwrap_or(0);
    let targets: Vec<usize> = match target_counts {
        Some(t) if t.len() == n_classes => t.to_vec(),
        Some(t) => {
            return Err(Error::InvalidInput(format!("{} targets for {n_classes} classes", t.len())))
        }
        None => vec![majority; n_classes],
    };

    let mut rows = x.to_vec();
    let mut labels = y.to_vec();
    let mut reduced_k = Vec::new();
    for k in 0..n_classes {
        let need = targets[k].saturating_sub(counts[k]);
        if need == 0 {
            continue;
        }
        let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == k).collect();
        if members.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "class {k} has {} member(s); SMOTE needs a neighbour",
                members.len()
            )));
        }
        let kk = k_neighbors.min(members.len() - 1);
        if kk < k_neighbors {
            reduced_k.push((k, kk));
        }
        // k nearest same-class neighbours; ties by member order
        let neighbours: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut d: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (sq_dist(&x[i], &x[j]), j))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d.truncate(kk);
                d.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        let mut rng = seed::task_rng(seed, k as u64);
        for _ in 0..need {
            let m = rng.random_range(0..members.len());
            let base = &x[members[m]];
            let nn = &x[neighbours[m][rng.random_range(0..kk)]];
            let u: f64 = rng.random();
            rows.push(base.iter().zip(nn).map(|(a, b)| a + u * (b - a)).collect());
            labels.push(k);
        }
    }
    let synthetic = rows.len() - x.len();
    Ok(SmoteOutcome {
        rows,
        labels,
        reduced_k,
        synthetic,
    })
}
