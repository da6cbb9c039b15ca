//! Classification of duration ranges: preprocessing, random forests, support
//! vector machines, cross-validated grid search and reporting.
//!
//! Samples are row-major `&[Vec<f64>]` with class indices `&[usize]` into a
//! sorted [`ClassSet`]. Every stochastic step takes an explicit seed.

mod anova;
mod cv;
mod forest;
mod metrics;
mod persist;
mod scaler;
mod smote;
mod split;
pub mod svm;
mod tree;
mod workflow;

pub use anova::{anova_f_scores, select_k_best};
pub use cv::{grid_search_cv, stratified_kfold, ConfigScore, GridSearchResult, ModelSpec, ParamGrid, Scoring};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use metrics::{classification_metrics, Averages, ClassMetrics, ClassificationReport};
pub use persist::{load_model, save_model, Estimator, Model, MODEL_FORMAT_VERSION};
pub use scaler::{apply_scaler, fit_scaler, ScalerParams};
pub use smote::{smote, SmoteOutcome};
pub use split::{stratified_split, SplitIndices};
pub use svm::{fit_svm, BinaryFit, ClassWeight, Gamma, Kernel, SvmModel, SvmParams, SvmWeights};
pub use tree::{fit_tree, DecisionTree, MaxFeatures, Node, TreeParams};
pub use workflow::{run_baseline, run_optimized, ClassifyOutcome, ModelFamily, PipelineSettings, SmoteSummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, de-duplicated class labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet(Vec<String>);

impl ClassSet {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut v: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        v.sort();
        v.dedup();
        Self(v)
    }

    /// Builds the class set and encodes `labels` as class indices.
    pub fn encode<S: AsRef<str>>(labels: &[S]) -> (Self, Vec<usize>) {
        let set = Self::new(labels);
        let idx = labels.iter().map(|l| set.index(l.as_ref()).unwrap()).collect();
        (set, idx)
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.0.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub(crate) fn class_counts(y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut c = vec![0; n_classes];
    for &k in y {
        c[k] += 1;
    }
    c
}

/// Index of the largest value; ties go to the smallest index.
pub(crate) fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_xy(x: &[Vec<f64>], y: &[usize]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let p = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidInput("rows differ in length".into()));
    }
    Ok(p)
}

pub(crate) fn take_rows(x: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| x[i].clone()).collect()
}

pub(crate) fn take<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

pub(crate) fn select_columns(x: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    x.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_set_is_sorted() {
        let (set, idx) = ClassSet::encode(&["b", "a", "c", "a"]);
        assert_eq!(set.labels(), ["a", "b", "c"]);
        assert_eq!(idx, vec![1, 0, 2, 0]);
    }

    #[test]
    fn argmax_ties_first() {
        assert_eq!(argmax(&[1, 3, 3]), 1);
        assert_eq!(argmax(&[2.0, 1.0]), 0);
    }
}
