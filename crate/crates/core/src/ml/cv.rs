use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::persist::Estimator;
use super::{class_counts, fit_forest, fit_svm, take, take_rows};
use super::{ClassWeight, ForestParams, Gamma, Kernel, MaxFeatures, SvmParams};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Accuracy,
    MacroF1,
}

impl Scoring {
    pub fn score(self, y_true: &[usize], y_pred: &[usize], n_classes: usize) -> f64 {
        match self {
            Scoring::Accuracy => {
                y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count() as f64 / y_true.len().max(1) as f64
            }
            Scoring::MacroF1 => macro_f1(y_true, y_pred, n_classes),
        }
    }
}

pub(crate) fn macro_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> f64 {
    let mut tp = vec![0usize; n_classes];
    let mut pred = vec![0usize; n_classes];
    let support = class_counts(y_true, n_classes);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        pred[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let f1: f64 = (0..n_classes)
        .map(|k| {
            let denom = pred[k] + support[k];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[k] as f64 / denom as f64
            }
        })
        .sum();
    f1 / n_classes.max(1) as f64
}

/// One hyperparameter configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(ForestParams),
    Svm(SvmParams),
}

impl ModelSpec {
    pub fn fit(&self, x: &[Vec<f64>], y: &[usize], n_classes: usize, seed: u64) -> Result<Estimator> {
        Ok(match self {
            ModelSpec::RandomForest(p) => Estimator::RandomForest(fit_forest(x, y, n_classes, p, seed)?),
            ModelSpec::Svm(p) => Estimator::Svm(fit_svm(x, y, n_classes, p, seed)?),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            ModelSpec::RandomForest(p) => format!(
                "n_estimators={} max_depth={} min_samples_split={} min_samples_leaf={}",
                p.n_estimators,
                p.max_depth.map_or("none".to_string(), |d| d.to_string()),
                p.min_samples_split,
                p.min_samples_leaf
            ),
            ModelSpec::Svm(p) => format!(
                "kernel={} C={} gamma={} class_weight={}",
                p.kernel, p.c, p.gamma, p.class_weight
            ),
        }
    }
}

/// Cartesian hyperparameter grid. Configurations are enumerated with the
/// last listed parameter varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ParamGrid {
    RandomForest {
        n_estimators: Vec<usize>,
        max_depth: Vec<Option<usize>>,
        min_samples_split: Vec<usize>,
        min_samples_leaf: Vec<usize>,
        #[serde(default = "default_max_features")]
        max_features: Vec<MaxFeatures>,
    },
    Svm {
        kernel: Vec<Kernel>,
        c: Vec<f64>,
        gamma: Vec<Gamma>,
        class_weight: Vec<ClassWeight>,
    },
}

fn default_max_features() -> Vec<MaxFeatures> {
    vec![MaxFeatures::Sqrt]
}

impl ParamGrid {
    pub fn default_forest() -> Self {
        ParamGrid::RandomForest {
            n_estimators: vec![100],
            max_depth: vec![None, Some(10)],
            min_samples_split: vec![2],
            min_samples_leaf: vec![1, 4],
            max_features: default_max_features(),
        }
    }

    pub fn default_svm() -> Self {
        ParamGrid::Svm {
            kernel: vec![Kernel::Rbf],
            c: vec![0.1, 1.0, 10.0],
            gamma: vec![Gamma::Scale],
            class_weight: vec![ClassWeight::None, ClassWeight::Balanced],
        }
    }

    pub fn configs(&self) -> Result<Vec<ModelSpec>> {
        let mut out = Vec::new();
        match self {
            ParamGrid::RandomForest {
                n_estimators,
                max_depth,
                min_samples_split,
                min_samples_leaf,
                max_features,
            } => {
                for &ne in n_estimators {
                    for &md in max_depth {
                        for &ss in min_samples_split {
                            for &sl in min_samples_leaf {
                                for &mf in max_features {
                                    out.push(ModelSpec::RandomForest(ForestParams {
                                        n_estimators: ne,
                                        max_depth: md,
                                        min_samples_split: ss,
                                        min_samples_leaf: sl,
                                        max_features: mf,
                                        bootstrap: true,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
            ParamGrid::Svm {
                kernel,
                c,
                gamma,
                class_weight,
            } => {
                for &k in kernel {
                    for &cc in c {
                        // gamma is irrelevant to the linear kernel
                        let gammas: &[Gamma] = if k == Kernel::Linear { &gamma[..gamma.len().min(1)] } else { gamma };
                        for &g in gammas {
                            for &cw in class_weight {
                                out.push(ModelSpec::Svm(SvmParams {
                                    kernel: k,
                                    c: cc,
                                    gamma: g,
                                    class_weight: cw,
                                    ..Default::default()
                                }));
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("hyperparameter grid is empty".into()));
        }
        Ok(out)
    }
}

/// Fold index per row. Each class's rows are shuffled and dealt round-robin
/// so per-class fold counts differ by at most one.
pub fn stratified_kfold(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("folds = {folds}; need at least 2")));
    }
    let counts = class_counts(y, n_classes);
    if let Some(k) = (0..n_classes).find(|&k| counts[k] > 0 && counts[k] < folds) {
        return Err(Error::InvalidInput(format!(
            "class {k} has {} rows, so some of the {folds} folds would lose it; use at most {} folds",
            counts[k], counts[k]
        )));
    }
    let mut assignment = vec![0usize; y.len()];
    let mut offset = 0;
    for k in 0..n_classes {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == k).collect();
        rows.shuffle(&mut seed::task_rng(seed, k as u64));
        for (pos, &i) in rows.iter().enumerate() {
            assignment[i] = (offset + pos) % folds;
        }
        offset += rows.len();
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigScore {
    pub spec: ModelSpec,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub scoring: Scoring,
    pub folds: usize,
    pub scores: Vec<ConfigScore>,
    pub best_index: usize,
    pub n_fits: usize,
}

impl GridSearchResult {
    pub fn best(&self) -> &ConfigScore {
        &self.scores[self.best_index]
    }
}

/// Exhaustive cross-validated search; ties go to the earliest configuration.
pub fn grid_search_cv(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    grid: &ParamGrid,
    folds: usize,
    scoring: Scoring,
    seed: u64,
) -> Result<GridSearchResult> {
    let configs = grid.configs()?;
    let assignment = stratified_kfold(y, n_classes, folds, seed)?;
    let split: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| (0..y.len()).partition(|&i| assignment[i] != f))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..folds).map(move |f| (c, f))).collect();
    let results: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(c, f)| {
            let (train, test) = &split[f];
            let model = configs[c].fit(
                &take_rows(x, train),
                &take(y, train),
                n_classes,
                seed::derive(seed::derive(seed, 1 + c as u64), f as u64),
            )?;
            let pred = model.predict(&take_rows(x, test));
            Ok(scoring.score(&take(y, test), &pred, n_classes))
        })
        .collect();
    let mut flat = Vec::with_capacity(results.len());
    for r in results {
        flat.push(r?);
    }
    let scores: Vec<ConfigScore> = configs
        .iter()
        .enumerate()
        .map(|(c, spec)| {
            let fold_scores = flat[c * folds..(c + 1) * folds].to_vec();
            let mean = fold_scores.iter().sum::<f64>() / folds as f64;
            ConfigScore {
                spec: *spec,
                fold_scores,
                mean,
            }
        })
        .collect();
    let mut best_index = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.mean > scores[best_index].mean {
            best_index = i;
        }
    }
    Ok(GridSearchResult {
        scoring,
        folds,
        n_fits: configs.len() * folds,
        scores,
        best_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_like(n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let a = ((i * 7919) % 1000) as f64 / 1000.0 - 0.5;
            let b = ((i * 104729) % 997) as f64 / 997.0 - 0.5;
            x.push(vec![a, b]);
            y.push(((a > 0.0) != (b > 0.0)) as usize);
        }
        (x, y)
    }

    #[test]
    fn fold_counts() {
        let y: Vec<usize> = (0..53).map(|i| i % 3).collect();
        let a = stratified_kfold(&y, 3, 5, 0).unwrap();
        for k in 0..3 {
            let per: Vec<usize> = (0..5).map(|f| (0..53).filter(|&i| y[i] == k && a[i] == f).count()).collect();
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
        assert!(stratified_kfold(&[0, 0, 0, 1, 1], 2, 3, 0).is_err());
    }

    #[test]
    fn two_by_two_grid_five_folds_is_twenty_fits() {
        let (x, y) = xor_like(60);
        let grid = ParamGrid::RandomForest {
            n_estimators: vec![3, 5],
            max_depth: vec![Some(1), None],
            min_samples_split: vec![2],
            min_samples_leaf: vec![1],
            max_features: default_max_features(),
        };
        let r = grid_search_cv(&x, &y, 2, &grid, 5, Scoring::Accuracy, 1).unwrap();
        assert_eq!(r.n_fits, 20);
        assert_eq!(r.scores.len(), 4);
    }

    #[test]
    fn single_config_is_returned() {
        let (x, y) = xor_like(40);
        let grid = ParamGrid::Svm {
            kernel: vec![Kernel::Linear],
            c: vec![1.0],
            gamma: vec![Gamma::Scale],
            class_weight: vec![ClassWeight::None],
        };
        let r = grid_search_cv(&x, &y, 2, &grid, 2, Scoring::Accuracy, 1).unwrap();
        assert_eq!(r.best_index, 0);
        assert_eq!(r.scores.len(), 1);
    }

    #[test]
    fn unlimited_depth_wins_on_xor() {
        let (x, y) = xor_like(200);
        let grid = ParamGrid::RandomForest {
            n_estimators: vec![20],
            max_depth: vec![Some(1), None],
            min_samples_split: vec![2],
            min_samples_leaf: vec![1],
            max_features: vec![MaxFeatures::All],
        };
        let r = grid_search_cv(&x, &y, 2, &grid, 5, Scoring::Accuracy, 3).unwrap();
        assert_eq!(r.best().spec, grid.configs().unwrap()[1]);
        assert!(r.scores[1].mean > 0.9 && r.scores[0].mean < 0.75);
    }

    #[test]
    fn macro_f1_hand_case() {
        // class 0: P 2/3 R 2/3; class 1: P 1/2 R 1/2
        let f = macro_f1(&[0, 0, 0, 1, 1], &[0, 0, 1, 0, 1], 2);
        assert!((f - (2.0 / 3.0 + 0.5) / 2.0).abs() < 1e-15);
    }
}
