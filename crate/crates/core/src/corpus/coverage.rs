use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CorpusRecord, EmbeddingTable, FrequencyLexicon};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n_records: usize,
    pub n_types: usize,
    /// Fraction of corpus word types present in the frequency lexicon.
    pub lexicon_coverage: f64,
    /// Fraction of corpus word types with an embedding vector.
    pub embedding_coverage: f64,
    /// Fraction of records carrying realized phones.
    pub realized_phones_fraction: f64,
    pub missing_from_lexicon: Vec<String>,
    pub missing_from_embeddings: Vec<String>,
}

pub fn validate_dataset(
    records: &[CorpusRecord],
    lexicon: &FrequencyLexicon,
    embeddings: &EmbeddingTable,
) -> Result<CoverageReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records".into()));
    }
    let types: BTreeSet<&str> = records.iter().map(|r| r.word.as_str()).collect();
    let missing_from_lexicon: Vec<String> = types
        .iter()
        .filter(|w| !lexicon.contains(w))
        .map(|w| w.to_string())
        .collect();
    let missing_from_embeddings: Vec<String> = types
        .iter()
        .filter(|w| !embeddings.contains(w))
        .map(|w| w.to_string())
        .collect();
    let n_types = types.len();
    let with_phones = records.iter().filter(|r| r.realized_phones.is_some()).count();
    Ok(CoverageReport {
        n_records: records.len(),
        n_types,
        lexicon_coverage: (n_types - missing_from_lexicon.len()) as f64 / n_types as f64,
        embedding_coverage: (n_types - missing_from_embeddings.len()) as f64 / n_types as f64,
        realized_phones_fraction: with_phones as f64 / records.len() as f64,
        missing_from_lexicon,
        missing_from_embeddings,
    })
}
