use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::class_counts;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Stratified train/test partition.
///
/// The test size is `ceil(fraction * n)`, shared among classes by largest
/// remainder so each class's test share is within one row of its
/// proportional quota.
pub fn stratified_split(labels: &[usize], n_classes: usize, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let counts = class_counts(labels, n_classes);
    if let Some(k) = counts.iter().position(|&c| c == 1) {
        return Err(Error::InvalidInput(format!("class {k} has a single row; cannot stratify")));
    }
    let n = labels.len();
    let n_test = (test_fraction * n as f64).ceil() as usize;
    let quotas: Vec<f64> = counts.iter().map(|&c| c as f64 * n_test as f64 / n as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = n_test - alloc.iter().sum::<usize>();
    for &k in &order {
        if remaining == 0 {
            break;
        }
        if alloc[k] < counts[k] {
            alloc[k] += 1;
            remaining -= 1;
        }
    }

    let mut rng = seed::rng(seed);
    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for k in 0..n_classes {
        let mut rows: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..alloc[k]]);
        train.extend_from_slice(&rows[alloc[k]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}
