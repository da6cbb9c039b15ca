use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, MaxFeatures, TreeParams};
use super::{argmax, check_xy};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub trees: Vec<DecisionTree>,
    pub tree_seeds: Vec<u64>,
    pub n_features: usize,
    pub n_classes: usize,
    /// Out-of-bag misclassification rate; `None` without bootstrap or when
    /// no row was ever left out.
    pub oob_error: Option<f64>,
}

/// Random forest: each tree is grown on a bootstrap sample of size `n`
/// drawn from its own generator `seed::derive(seed, t)`.
pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    let p = check_xy(x, y)?;
    if x.is_empty() {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if params.n_estimators == 0 {
        return Err(Error::InvalidInput("n_estimators must be >= 1".into()));
    }
    let n = x.len();
    let tp = params.tree_params();
    let tree_seeds: Vec<u64> = (0..params.n_estimators as u64).map(|t| seed::derive(seed, t)).collect();
    let fitted: Vec<(DecisionTree, Vec<bool>)> = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = seed::rng(s);
            let mut in_bag = vec![!params.bootstrap; n];
            let sample: Vec<usize> = if params.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            (grow(x, y, n_classes, sample, &tp, &mut rng), in_bag)
        })
        .collect();

    let oob_error = if params.bootstrap {
        let mut votes = vec![vec![0usize; n_classes]; n];
        for (tree, in_bag) in &fitted {
            for i in (0..n).filter(|&i| !in_bag[i]) {
                votes[i][tree.predict_one(&x[i])] += 1;
            }
        }
        let scored: Vec<usize> = (0..n).filter(|&i| votes[i].iter().any(|&v| v > 0)).collect();
        (!scored.is_empty()).then(|| {
            scored.iter().filter(|&&i| argmax(&votes[i]) != y[i]).count() as f64 / scored.len() as f64
        })
    } else {
        None
    };

    Ok(ForestModel {
        params: *params,
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        tree_seeds,
        n_features: p,
        n_classes,
        oob_error,
    })
}

impl ForestModel {
    pub fn votes(&self, row: &[f64]) -> Vec<usize> {
        let mut v = vec![0usize; self.n_classes];
        for t in &self.trees {
            v[t.predict_one(row)] += 1;
        }
        v
    }

    /// Majority vote; ties go to the smallest class index.
    pub fn predict_one(&self, row: &[f64]) -> usize {
        argmax(&self.votes(row))
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    /// Mean decrease in impurity, normalized per tree and then across the
    /// forest. Returns `(importances, any_split)`; a forest of single leaves
    /// gives all zeros and `false`.
    pub fn feature_importances(&self) -> (Vec<f64>, bool) {
        let mut total = vec![0.0; self.n_features];
        for t in &self.trees {
            let imp = t.impurity_decrease();
            let s: f64 = imp.iter().sum();
            if s > 0.0 {
                for (a, v) in total.iter_mut().zip(&imp) {
                    *a += v / s;
                }
            }
        }
        let s: f64 = total.iter().sum();
        if s > 0.0 {
            total.iter_mut().for_each(|v| *v /= s);
            (total, true)
        } else {
            (total, false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn two_gaussians(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = seed::rng(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let k = i % 2;
            let c = if k == 0 { -3.0 } else { 3.0 };
            x.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            y.push(k);
        }
        (x, y)
    }

    #[test]
    fn single_row_single_tree() {
        let m = fit_forest(&[vec![1.0, 2.0]], &[1], 2, &ForestParams { n_estimators: 1, ..Default::default() }, 0)
            .unwrap();
        assert_eq!(m.predict_one(&[9.0, 9.0]), 1);
    }

    #[test]
    fn separable_gaussians() {
        let (x, y) = two_gaussians(400, 1);
        let (xt, yt) = two_gaussians(200, 2);
        let m = fit_forest(&x, &y, 2, &ForestParams { n_estimators: 30, ..Default::default() }, 5).unwrap();
        let acc = m.predict(&xt).iter().zip(&yt).filter(|(a, b)| a == b).count() as f64 / yt.len() as f64;
        assert!(acc >= 0.95, "{acc}");
        assert!(m.oob_error.unwrap() < 0.05);
    }

    #[test]
    fn single_informative_feature_gets_all_importance() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<usize> = (0..60).map(|i| (i >= 30) as usize).collect();
        let m = fit_forest(&x, &y, 2, &ForestParams { n_estimators: 10, ..Default::default() }, 3).unwrap();
        let (imp, any) = m.feature_importances();
        assert!(any);
        assert_eq!(imp, vec![1.0, 0.0]);
    }

    #[test]
    fn leaves_only_forest_flags_zero_importance() {
        let x = vec![vec![0.0], vec![1.0]];
        let m = fit_forest(&x, &[0, 0], 2, &ForestParams { n_estimators: 3, ..Default::default() }, 0).unwrap();
        assert_eq!(m.feature_importances(), (vec![0.0], false));
    }

    #[test]
    fn vote_is_independent_of_tree_order() {
        let (x, y) = two_gaussians(100, 9);
        let m = fit_forest(&x, &y, 2, &ForestParams { n_estimators: 15, ..Default::default() }, 2).unwrap();
        let mut r = m.clone();
        r.trees.reverse();
        assert_eq!(m.predict(&x), r.predict(&x));
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let (x, y) = two_gaussians(120, 4);
        let fit = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fit_forest(&x, &y, 2, &ForestParams { n_estimators: 20, ..Default::default() }, 77).unwrap())
        };
        assert_eq!(fit(1), fit(8));
    }
}
