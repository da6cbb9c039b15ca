use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::persist::{Estimator, Model};
use super::{
    anova_f_scores, apply_scaler, check_xy, classification_metrics, fit_scaler, grid_search_cv, select_columns,
    select_k_best, smote, stratified_split, take, take_rows, ClassSet, ClassificationReport, ForestParams,
    GridSearchResult, ModelSpec, ParamGrid, Scoring, SplitIndices, SvmParams,
};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    #[serde(alias = "rf")]
    RandomForest,
    Svm,
}

impl FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rf" | "random_forest" | "randomforest" => Ok(ModelFamily::RandomForest),
            "svm" => Ok(ModelFamily::Svm),
            other => Err(Error::InvalidInput(format!("model family `{other}`; expected `rf` or `svm`"))),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::RandomForest => "rf",
            ModelFamily::Svm => "svm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub family: ModelFamily,
    pub test_fraction: f64,
    pub baseline_forest: ForestParams,
    pub baseline_svm: SvmParams,
    /// Features kept by ANOVA-F selection; clamped to the feature count.
    pub select_k: usize,
    pub smote_k: usize,
    pub folds: usize,
    pub scoring: Scoring,
    /// Defaults to the family's built-in grid.
    pub grid: Option<ParamGrid>,
    pub seed: u64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            family: ModelFamily::RandomForest,
            test_fraction: 0.25,
            baseline_forest: ForestParams::default(),
            baseline_svm: SvmParams::default(),
            select_k: 4,
            smote_k: 5,
            folds: 5,
            scoring: Scoring::Accuracy,
            grid: None,
            seed: 42,
        }
    }
}

impl PipelineSettings {
    pub fn grid(&self) -> ParamGrid {
        self.grid.clone().unwrap_or_else(|| match self.family {
            ModelFamily::RandomForest => ParamGrid::default_forest(),
            ModelFamily::Svm => ParamGrid::default_svm(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteSummary {
    pub synthetic: usize,
    pub class_counts_after: Vec<usize>,
    pub reduced_k: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutcome {
    pub stage: String,
    pub family: ModelFamily,
    pub spec: ModelSpec,
    pub train_rows: usize,
    pub test_rows: usize,
    pub selected_features: Vec<String>,
    pub anova_f: Option<Vec<f64>>,
    pub smote: Option<SmoteSummary>,
    pub grid_search: Option<GridSearchResult>,
    /// Mean decrease in impurity over `selected_features` (forests only).
    pub feature_importances: Option<Vec<f64>>,
    pub report: ClassificationReport,
    #[serde(skip)]
    pub model: Option<Model>,
}

struct Prepared {
    classes: ClassSet,
    y: Vec<usize>,
    split: SplitIndices,
}

fn prepare(x: &[Vec<f64>], labels: &[String], features: &[String], settings: &PipelineSettings) -> Result<Prepared> {
    let p = check_xy(x, &vec![0; labels.len()])?;
    if x.is_empty() {
        return Err(Error::EmptyInput("no rows to classify".into()));
    }
    if p != features.len() {
        return Err(Error::InvalidInput(format!("{p} columns but {} feature names", features.len())));
    }
    let (classes, y) = ClassSet::encode(labels);
    let split = stratified_split(&y, classes.len(), settings.test_fraction, settings.seed)?;
    Ok(Prepared { classes, y, split })
}

fn importances(est: &Estimator) -> Option<Vec<f64>> {
    match est {
        Estimator::RandomForest(m) => Some(m.feature_importances().0),
        Estimator::Svm(_) => None,
    }
}

/// Fits the family's default model on raw features and scores it on the
/// held-out split.
pub fn run_baseline(
    x: &[Vec<f64>],
    labels: &[String],
    features: &[String],
    settings: &PipelineSettings,
) -> Result<ClassifyOutcome> {
    let pr = prepare(x, labels, features, settings)?;
    let g = pr.classes.len();
    let spec = match settings.family {
        ModelFamily::RandomForest => ModelSpec::RandomForest(settings.baseline_forest),
        ModelFamily::Svm => ModelSpec::Svm(settings.baseline_svm),
    };
    let (train, test) = (&pr.split.train, &pr.split.test);
    let est = spec.fit(&take_rows(x, train), &take(&pr.y, train), g, seed::derive(settings.seed, 1))?;
    let model = Model::new(pr.classes.clone(), features.to_vec(), est);
    let pred = model.predict(&take_rows(x, test));
    let report = classification_metrics(&take(&pr.y, test), &pred, &pr.classes)?;
    Ok(ClassifyOutcome {
        stage: "baseline".into(),
        family: settings.family,
        spec,
        train_rows: train.len(),
        test_rows: test.len(),
        selected_features: features.to_vec(),
        anova_f: None,
        smote: None,
        grid_search: None,
        feature_importances: importances(&model.estimator),
        report,
        model: Some(model),
    })
}

/// Scale, keep the `select_k` best ANOVA-F features, oversample with SMOTE,
/// tune by cross-validated grid search, refit the best configuration on the
/// full resampled training set and score on the held-out split.
pub fn run_optimized(
    x: &[Vec<f64>],
    labels: &[String],
    features: &[String],
    settings: &PipelineSettings,
) -> Result<ClassifyOutcome> {
    let pr = prepare(x, labels, features, settings)?;
    let g = pr.classes.len();
    let (train, test) = (&pr.split.train, &pr.split.test);
    let y_train = take(&pr.y, train);

    let scaler = fit_scaler(&take_rows(x, train))?;
    let x_train = apply_scaler(&scaler, &take_rows(x, train));
    let f = anova_f_scores(&x_train, &y_train, g)?;
    let selected = select_k_best(&f, settings.select_k.clamp(1, features.len()))?;
    let x_train = select_columns(&x_train, &selected);

    let sm = smote(&x_train, &y_train, g, settings.smote_k, None, seed::derive(settings.seed, 2))?;
    let grid = grid_search_cv(
        &sm.rows,
        &sm.labels,
        g,
        &settings.grid(),
        settings.folds,
        settings.scoring,
        seed::derive(settings.seed, 3),
    )?;
    let spec = grid.best().spec;
    let est = spec.fit(&sm.rows, &sm.labels, g, seed::derive(settings.seed, 4))?;
    let mut model = Model::new(pr.classes.clone(), features.to_vec(), est);
    model.scaler = Some(scaler);
    model.selected = Some(selected.clone());
    let pred = model.predict(&take_rows(x, test));
    let report = classification_metrics(&take(&pr.y, test), &pred, &pr.classes)?;
    let smote_summary = SmoteSummary {
        synthetic: sm.synthetic,
        class_counts_after: super::class_counts(&sm.labels, g),
        reduced_k: sm.reduced_k.iter().map(|&(k, kk)| (pr.classes.label(k).to_string(), kk)).collect(),
    };
    Ok(ClassifyOutcome {
        stage: "optimized".into(),
        family: settings.family,
        spec,
        train_rows: train.len(),
        test_rows: test.len(),
        selected_features: selected.iter().map(|&i| features[i].clone()).collect(),
        anova_f: Some(f),
        smote: Some(smote_summary),
        grid_search: Some(grid),
        feature_importances: importances(&model.estimator),
        report,
        model: Some(model),
    })
}
