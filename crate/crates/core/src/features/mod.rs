//! Word-level predictors of speech duration and the analysis-ready table.

mod bins;
mod lexical;
mod phrase;
mod table;

pub use bins::{assign_bin, make_bins, quantile_sorted, BinLabel, BinSpec};
pub use lexical::{
    cite_length, deletion_count, deletions_between, log_word_frequency, word_length, CiteLength, VowelSet,
    ARPABET_VOWELS,
};
pub use phrase::{phrase_features, phrase_rate, phrase_runs, PhraseFeatures};
pub use table::{CategoricalColumn, FeatureTable, NumericColumn};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{CorpusRecord, FrequencyLexicon};
use crate::error::{Error, Result};
use crate::semrel::{RelevanceSeries, RelevanceStatus};

pub const RESPONSE: &str = "WordDuration";
pub const GROUPING_COLUMNS: [&str; 3] = ["Speaker", "Sex", "Age"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    WordLength,
    LogWordFreq,
    CiteLength,
    PhraseRate,
    /// Letters in the containing phrase.
    PhraseLength,
    /// Words in the containing phrase.
    PhraseWords,
    Deletions,
    SemanticRelevance,
    SpeakerRate,
}

pub const DEFAULT_FEATURES: [Feature; 7] = [
    Feature::WordLength,
    Feature::LogWordFreq,
    Feature::CiteLength,
    Feature::PhraseRate,
    Feature::PhraseLength,
    Feature::Deletions,
    Feature::SemanticRelevance,
];

impl Feature {
    pub fn name(self) -> &'static str {
        match self {
            Feature::WordLength => "WordLength",
            Feature::LogWordFreq => "LogWordFreq",
            Feature::CiteLength => "CiteLength",
            Feature::PhraseRate => "PhraseRate",
            Feature::PhraseLength => "PhraseLength",
            Feature::PhraseWords => "PhraseWords",
            Feature::Deletions => "Deletions",
            Feature::SemanticRelevance => "SemanticRelevance",
            Feature::SpeakerRate => "SpeakerRate",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "WordLength" => Feature::WordLength,
            "LogWordFreq" | "LogWordFrequency" | "LogFrequency" => Feature::LogWordFreq,
            "CiteLength" => Feature::CiteLength,
            "PhraseRate" => Feature::PhraseRate,
            "PhraseLength" => Feature::PhraseLength,
            "PhraseWords" => Feature::PhraseWords,
            "Deletions" => Feature::Deletions,
            "SemanticRelevance" => Feature::SemanticRelevance,
            "SpeakerRate" => Feature::SpeakerRate,
            other => return Err(Error::UnknownFeature(other.to_string())),
        })
    }
}

/// Parses feature names; the grouping columns are accepted and skipped since
/// they are always carried.
pub fn parse_feature_list<S: AsRef<str>>(names: &[S]) -> Result<Vec<Feature>> {
    let mut out = Vec::new();
    for n in names {
        let n = n.as_ref();
        if GROUPING_COLUMNS.contains(&n) {
            continue;
        }
        let f: Feature = n.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssemblyReport {
    pub input_records: usize,
    pub rows: usize,
    /// Rows dropped because a requested feature was missing.
    pub dropped_missing: usize,
    /// Rows whose canonical transcription had no vowel nucleus.
    pub cite_length_flagged: usize,
    /// Rows with no preceding context (relevance 0).
    pub empty_context: usize,
    pub bins: Option<BinSpec>,
}

#[derive(Debug, Clone)]
pub struct AssemblyOptions {
    pub features: Vec<Feature>,
    /// Number of duration classes; `None` skips labelling.
    pub bins: Option<usize>,
    pub vowels: VowelSet,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            features: DEFAULT_FEATURES.to_vec(),
            bins: Some(5),
            vowels: VowelSet::default(),
        }
    }
}

/// Computes the requested features for every record, drops rows with any
/// missing value, and labels the survivors with duration-range classes
/// computed over the surviving rows.
pub fn assemble_feature_table(
    records: &[CorpusRecord],
    lexicon: &FrequencyLexicon,
    relevance: &RelevanceSeries,
    opts: &AssemblyOptions,
) -> Result<(FeatureTable, AssemblyReport)> {
    if relevance.len() != records.len() {
        return Err(Error::InvalidInput(format!(
            "relevance series has {} entries for {} records",
            relevance.len(),
            records.len()
        )));
    }
    let phrases = phrase_features(records)?;
    let mut cite_flagged = 0;
    let mut columns: Vec<Vec<Option<f64>>> = Vec::with_capacity(opts.features.len());
    for &f in &opts.features {
        let col: Vec<Option<f64>> = records
            .iter()
            .enumerate()
            .map(|(i, r)| match f {
                Feature::WordLength => Some(word_length(&r.word) as f64),
                Feature::LogWordFreq => Some(log_word_frequency(&r.word, lexicon)),
                Feature::CiteLength => r.canonical_phones.as_ref().map(|p| {
                    let c = cite_length(p, &opts.vowels);
                    if c.flagged {
                        cite_flagged += 1;
                    }
                    c.syllables as f64
                }),
                Feature::PhraseRate => Some(phrases.rate[i]),
                Feature::PhraseLength => Some(phrases.letters[i]),
                Feature::PhraseWords => Some(phrases.words[i]),
                Feature::Deletions => deletion_count(r).map(|d| d as f64),
                Feature::SemanticRelevance => match relevance.status[i] {
                    RelevanceStatus::MissingTarget => None,
                    _ => Some(relevance.scores[i]),
                },
                Feature::SpeakerRate => Some(phrases.speaker_rate[i]),
            })
            .collect();
        columns.push(col);
    }

    let keep: Vec<usize> = (0..records.len())
        .filter(|&i| columns.iter().all(|c| c[i].is_some()))
        .collect();
    let mut table = FeatureTable {
        n_rows: keep.len(),
        response: Some(NumericColumn {
            name: RESPONSE.into(),
            values: keep.iter().map(|&i| records[i].duration()).collect(),
        }),
        numeric: opts
            .features
            .iter()
            .zip(&columns)
            .map(|(f, c)| NumericColumn {
                name: f.name().into(),
                values: keep.iter().map(|&i| c[i].unwrap()).collect(),
            })
            .collect(),
        categorical: vec![
            CategoricalColumn {
                name: "Speaker".into(),
                values: keep.iter().map(|&i| records[i].speaker_id.clone()).collect(),
            },
            CategoricalColumn {
                name: "Sex".into(),
                values: keep
                    .iter()
                    .map(|&i| records[i].sex.map_or("NA", |s| s.as_str()).to_string())
                    .collect(),
            },
            CategoricalColumn {
                name: "Age".into(),
                values: keep
                    .iter()
                    .map(|&i| records[i].age.map_or("NA", |a| a.as_str()).to_string())
                    .collect(),
            },
        ],
        label: None,
        provenance: keep.clone(),
    };

    let mut bins = None;
    if let Some(k) = opts.bins {
        let durations = table.response.as_ref().unwrap().values.clone();
        let spec = make_bins(&durations, k)?;
        table.label = Some(
            durations
                .iter()
                .map(|&d| spec.label(d).expect("in-sample duration within bin range").to_string())
                .collect(),
        );
        bins = Some(spec);
    }

    let report = AssemblyReport {
        input_records: records.len(),
        rows: keep.len(),
        dropped_missing: records.len() - keep.len(),
        cite_length_flagged: cite_flagged,
        empty_context: keep
            .iter()
            .filter(|&&i| relevance.status[i] == RelevanceStatus::EmptyContext)
            .count(),
        bins,
    };
    Ok((table, report))
}
