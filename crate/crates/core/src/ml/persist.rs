use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassSet, ForestModel, ScalerParams, SvmModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "lexdur-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum Estimator {
    RandomForest(ForestModel),
    Svm(SvmModel),
}

impl Estimator {
    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        match self {
            Estimator::RandomForest(m) => m.predict(rows),
            Estimator::Svm(m) => m.predict(rows),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Estimator::RandomForest(_) => "random_forest",
            Estimator::Svm(_) => "svm",
        }
    }
}

/// A trained classifier with the preprocessing needed to apply it to raw
/// feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format: String,
    pub version: u32,
    pub classes: ClassSet,
    /// Names of the raw input columns, in order.
    pub features: Vec<String>,
    pub scaler: Option<ScalerParams>,
    /// Indices into `features` kept after selection, applied after scaling.
    pub selected: Option<Vec<usize>>,
    pub estimator: Estimator,
}

impl Model {
    pub fn new(classes: ClassSet, features: Vec<String>, estimator: Estimator) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            classes,
            features,
            scaler: None,
            selected: None,
            estimator,
        }
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let scaled = match &self.scaler {
            Some(s) => super::apply_scaler(s, rows),
            None => rows.to_vec(),
        };
        match &self.selected {
            Some(cols) => super::select_columns(&scaled, cols),
            None => scaled,
        }
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        self.estimator.predict(&self.transform(rows))
    }

    pub fn predict_labels(&self, rows: &[Vec<f64>]) -> Vec<String> {
        self.predict(rows).into_iter().map(|k| self.classes.label(k).to_string()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let format = v.get("format").and_then(|f| f.as_str()).unwrap_or("");
        if format != MODEL_FORMAT {
            return Err(Error::InvalidInput(format!("not a model file (format `{format}`)")));
        }
        let version = v.get("version").and_then(|f| f.as_u64()).unwrap_or(0);
        if version != MODEL_FORMAT_VERSION as u64 {
            return Err(Error::Unsupported(format!(
                "model format version {version}; this build reads {MODEL_FORMAT_VERSION}"
            )));
        }
        Ok(serde_json::from_value(v)?)
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Model::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{fit_forest, fit_svm, ForestParams, SvmParams};

    #[test]
    fn round_trip_preserves_predictions() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y: Vec<usize> = (0..40).map(|i| (i >= 20) as usize).collect();
        let classes = ClassSet::new(&["1", "2"]);
        let feats = vec!["a".to_string(), "b".to_string()];
        let rf = fit_forest(&x, &y, 2, &ForestParams { n_estimators: 5, ..Default::default() }, 1).unwrap();
        let svm = fit_svm(&x, &y, 2, &SvmParams::default(), 1).unwrap();
        for est in [Estimator::RandomForest(rf), Estimator::Svm(svm)] {
            let m = Model::new(classes.clone(), feats.clone(), est);
            let back = Model::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.predict(&x), m.predict(&x));
            assert_eq!(back, m);
        }
    }

    #[test]
    fn wrong_version_rejected() {
        let text = r#"{"format":"lexdur-model","version":99}"#;
        assert_eq!(Model::from_json(text).unwrap_err().code(), "E_UNSUPPORTED");
        assert!(Model::from_json(r#"{"format":"x"}"#).is_err());
    }
}
