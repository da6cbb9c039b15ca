use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::normalize_word;
use crate::error::{Error, Result};

/// Word counts from a reference (subtitle-style) frequency list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLexicon {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl FrequencyLexicon {
    pub fn from_counts<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut counts = BTreeMap::new();
        for (w, c) in entries {
            *counts.entry(normalize_word(w.as_ref())).or_insert(0) += c;
        }
        let total: u64 = counts.values().sum();
        if counts.is_empty() || total == 0 {
            return Err(Error::EmptyInput("empty lexicon".into()));
        }
        Ok(Self { counts, total })
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct word types.
    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }
}

/// Parses `word<TAB>count` lines (any whitespace separator is accepted).
/// Duplicate words are merged by summation.
pub fn parse_frequency_list<R: BufRead>(reader: R) -> Result<FrequencyLexicon> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<lexicon>", e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (word, count) = match line.rsplit_once(|c: char| c.is_whitespace()) {
            Some((w, c)) if !w.trim().is_empty() => (w.trim(), c),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected `word<TAB>count`".into(),
                })
            }
        };
        let count: u64 = count.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("count must be a non-negative integer, got `{count}`"),
        })?;
        entries.push((word.to_string(), count));
    }
    FrequencyLexicon::from_counts(entries)
}
