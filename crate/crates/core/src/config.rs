//! Declarative run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ColumnMap;
use crate::error::{Error, Result};
use crate::features::{parse_feature_list, Feature, DEFAULT_FEATURES};
use crate::ml::PipelineSettings;
use crate::semrel::{WeightScheme, WindowOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Canonical column name → header used by the corpus export.
    pub columns: ColumnMap,
    /// Characters that open pause/noise marker tokens.
    pub marker_chars: Option<Vec<char>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    pub list: Vec<String>,
    /// Duration classes; 0 disables labelling.
    pub bins: usize,
    /// Preceding words in the relevance window.
    pub window: usize,
    pub include_nonadjacent: bool,
    pub weights: WeightScheme,
    /// Vowel-nucleus phone symbols; defaults to ARPAbet vowels.
    pub vowels: Option<Vec<String>>,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            list: DEFAULT_FEATURES.iter().map(|f| f.name().to_string()).collect(),
            bins: 5,
            window: 3,
            include_nonadjacent: false,
            weights: WeightScheme::Proximity,
            vowels: None,
        }
    }
}

impl FeatureSettings {
    pub fn features(&self) -> Result<Vec<Feature>> {
        parse_feature_list(&self.list)
    }

    pub fn window_options(&self) -> WindowOptions {
        WindowOptions {
            size: self.window,
            include_nonadjacent: self.include_nonadjacent,
            scheme: self.weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifySettings {
    /// Also run scaling, selection, oversampling and grid search.
    pub optimize: bool,
    pub save_model: bool,
    #[serde(flatten)]
    pub pipeline: PipelineSettings,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            optimize: true,
            save_model: true,
            pipeline: PipelineSettings::default(),
        }
    }
}

pub const DEFAULT_FORMULAS: [&str; 8] = [
    "lm1 = lmer(WordDuration ~ WordLength + LogWordFreq + CiteLength + PhraseRate + (1|Sex) + (1|Speaker))",
    "lm2 = lmer(WordDuration ~ WordLength + LogWordFreq + CiteLength + SemanticRelevance + PhraseRate + Deletions + (1|Age) + (1|Sex) + (1|Speaker))",
    "lm3 = lmer(WordDuration ~ WordLength + LogWordFreq + CiteLength + SemanticRelevance + PhraseRate + Deletions + (1|Age) + (1|Speaker))",
    "lm4 = lmer(WordDuration ~ WordLength + LogWordFreq + CiteLength + SemanticRelevance + PhraseRate + (1|Age) + (1|Speaker))",
    "lm5 = lmer(WordDuration ~ WordLength + LogWordFreq + CiteLength + SemanticRelevance + PhraseRate + Deletions + (1|Sex) + (1|Speaker))",
    r#"t1 = bam(WordDuration ~ s(WordLength, k=6) + s(LogWordFreq) + s(CiteLength, k=4) + s(SemanticRelevance) + s(PhraseRate) + s(Deletions, k=4) + s(Age, bs="re") + s(Speaker, bs="re"))"#,
    r#"t2 = bam(WordDuration ~ s(WordLength, k=6) + s(LogWordFreq) + s(CiteLength, k=4) + s(SemanticRelevance) + s(PhraseRate) + s(Deletions, k=4) + s(Sex, bs="re") + s(Speaker, bs="re"))"#,
    r#"t6 = bam(WordDuration ~ s(WordLength, k=6) + s(LogWordFreq) + s(CiteLength, k=4) + s(PhraseRate) + s(Deletions, k=4) + s(Sex, bs="re") + s(Speaker, bs="re"))"#,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressSettings {
    /// `name = lmer(...)` or `name = bam(...)`; smooth terms imply the
    /// additive model.
    pub formulas: Vec<String>,
    /// Points per partial-effect curve.
    pub grid_size: usize,
}

impl Default for RegressSettings {
    fn default() -> Self {
        Self {
            formulas: DEFAULT_FORMULAS.iter().map(|s| s.to_string()).collect(),
            grid_size: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateSettings {
    /// Defaults to the response and every numeric feature.
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    Ml,
    Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub tracks: Vec<Track>,
    pub inputs: Inputs,
    pub features: FeatureSettings,
    pub classify: ClassifySettings,
    pub regress: RegressSettings,
    pub correlate: CorrelateSettings,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("out"),
            tracks: vec![Track::Ml, Track::Stats],
            inputs: Inputs::default(),
            features: FeatureSettings::default(),
            classify: ClassifySettings::default(),
            regress: RegressSettings::default(),
            correlate: CorrelateSettings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    fn input(&self, which: &str, p: &Option<PathBuf>) -> Result<PathBuf> {
        let p = p
            .as_ref()
            .ok_or_else(|| Error::Config(format!("inputs.{which} is not set")))?;
        let full = self.resolve(p);
        if !full.is_file() {
            return Err(Error::Config(format!("inputs.{which}: {} does not exist", full.display())));
        }
        Ok(full)
    }

    pub fn corpus_path(&self) -> Result<PathBuf> {
        self.input("corpus", &self.inputs.corpus)
    }

    pub fn lexicon_path(&self) -> Result<PathBuf> {
        self.input("lexicon", &self.inputs.lexicon)
    }

    pub fn embeddings_path(&self) -> Result<PathBuf> {
        self.input("embeddings", &self.inputs.embeddings)
    }

    /// Checks everything that can be checked before any stage runs.
    pub fn validate(&self) -> Result<()> {
        self.corpus_path()?;
        self.lexicon_path()?;
        self.embeddings_path()?;
        self.features.features()?;
        if self.features.bins == 1 {
            return Err(Error::Config("features.bins must be 0 or at least 2".into()));
        }
        if self.features.window == 0 {
            return Err(Error::Config("features.window must be positive".into()));
        }
        if self.regress.grid_size < 2 {
            return Err(Error::Config("regress.grid_size must be at least 2".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical configuration, excluding the output location.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}
