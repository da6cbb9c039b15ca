use std::collections::HashSet;

use crate::corpus::{CorpusRecord, FrequencyLexicon};

/// Number of alphabetic characters in the word.
pub fn word_length(word: &str) -> usize {
    word.chars().filter(|c| c.is_alphabetic()).count()
}

/// Natural log of the add-one smoothed per-million rate:
/// `ln((count + 1) / (total + |V|) * 1e6)`.
pub fn log_word_frequency(word: &str, lexicon: &FrequencyLexicon) -> f64 {
    let count = lexicon.count(word) as f64;
    let denom = lexicon.total() as f64 + lexicon.vocabulary_size() as f64;
    ((count + 1.0) / denom * 1e6).ln()
}

/// ARPAbet vowel symbols (plus the TIMIT reduced vowels) used as syllable nuclei.
pub const ARPABET_VOWELS: [&str; 19] = [
    "aa", "ae", "ah", "ao", "aw", "ay", "eh", "er", "ey", "ih", "iy", "ow", "oy", "uh", "uw", "ax", "axr", "ix", "ux",
];

#[derive(Debug, Clone)]
pub struct VowelSet(HashSet<String>);

impl Default for VowelSet {
    fn default() -> Self {
        Self(ARPABET_VOWELS.iter().map(|s| s.to_string()).collect())
    }
}

impl VowelSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(symbols: I) -> Self {
        Self(symbols.into_iter().map(|s| s.into().to_lowercase()).collect())
    }

    /// Stress digits (`AA1`) are ignored.
    pub fn is_nucleus(&self, phone: &str) -> bool {
        let base = phone.trim_end_matches(|c: char| c.is_ascii_digit()).to_lowercase();
        self.0.contains(&base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CiteLength {
    pub syllables: usize,
    /// Set when the transcription contained no vowel nucleus.
    pub flagged: bool,
}

/// Syllable count of the canonical transcription.
pub fn cite_length(phones: &[String], vowels: &VowelSet) -> CiteLength {
    let syllables = phones.iter().filter(|p| vowels.is_nucleus(p)).count();
    CiteLength {
        syllables,
        flagged: syllables == 0,
    }
}

/// Deletions in a minimal unit-cost edit alignment from `canonical` to
/// `realized`. Among equally short alignments the one with the fewest
/// deletions is used.
pub fn deletions_between<T: PartialEq>(canonical: &[T], realized: &[T]) -> usize {
    let (n, m) = (canonical.len(), realized.len());
    // (edit cost, deletions), compared lexicographically.
    let mut prev: Vec<(usize, usize)> = (0..=m).map(|j| (j, 0)).collect();
    let mut cur = vec![(0, 0); m + 1];
    for i in 1..=n {
        cur[0] = (i, i);
        for j in 1..=m {
            let sub_cost = usize::from(canonical[i - 1] != realized[j - 1]);
            let diag = (prev[j - 1].0 + sub_cost, prev[j - 1].1);
            let del = (prev[j].0 + 1, prev[j].1 + 1);
            let ins = (cur[j - 1].0 + 1, cur[j - 1].1);
            cur[j] = diag.min(del).min(ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m].1
}

/// Deletion count for a record: from the phone alignment when realized
/// phones exist, else from a precomputed count; `None` when neither exists.
pub fn deletion_count(record: &CorpusRecord) -> Option<usize> {
    match (&record.canonical_phones, &record.realized_phones) {
        (Some(c), Some(r)) => Some(deletions_between(c, r)),
        _ => record.deletions.map(|d| d as usize),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phones(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn word_lengths() {
        assert_eq!(word_length("water"), 5);
        assert_eq!(word_length("i"), 1);
        assert_eq!(word_length("don't"), 4);
    }

    #[test]
    fn log_frequency_hand_values() {
        let lex = FrequencyLexicon::from_counts([("a", 9u64)]).unwrap();
        assert!((log_word_frequency("a", &lex) - 1e6f64.ln()).abs() < 1e-12);
        assert!((log_word_frequency("zzz", &lex) - 1e5f64.ln()).abs() < 1e-12);
        assert!((log_word_frequency("a", &lex) - 13.815510557964274).abs() < 1e-9);
        assert!((log_word_frequency("zzz", &lex) - 11.512925464970229).abs() < 1e-9);
    }

    #[test]
    fn equal_counts_equal_values() {
        let lex = FrequencyLexicon::from_counts([("a", 4u64), ("b", 4), ("c", 1)]).unwrap();
        assert_eq!(log_word_frequency("a", &lex), log_word_frequency("b", &lex));
    }

    #[test]
    fn syllable_counts() {
        let v = VowelSet::default();
        assert_eq!(cite_length(&phones("w aa dx er"), &v).syllables, 2);
        assert_eq!(cite_length(&phones("dh ah"), &v).syllables, 1);
        assert_eq!(cite_length(&phones("DH AH0"), &v).syllables, 1);
        let s = cite_length(&phones("s"), &v);
        assert_eq!(s.syllables, 0);
        assert!(s.flagged);
    }

    #[test]
    fn deletion_alignment() {
        assert_eq!(deletions_between(&phones("w ah dx er"), &phones("w ah er")), 1);
        assert_eq!(deletions_between(&phones("w ah dx er"), &phones("w ah dx er")), 0);
        assert_eq!(deletions_between(&phones("w ah dx er"), &[]), 4);
        // substitution preferred over delete+insert
        assert_eq!(deletions_between(&phones("a b"), &phones("b c")), 0);
    }

    proptest! {
        #[test]
        fn frequency_increases_with_count(c1 in 0u64..1000, extra in 1u64..1000) {
            let lex = FrequencyLexicon::from_counts([("a", c1), ("b", c1 + extra), ("z", 1)]).unwrap();
            prop_assert!(log_word_frequency("b", &lex) > log_word_frequency("a", &lex));
        }

        #[test]
        fn deletions_shrink_as_realized_approaches_canonical(
            canon in proptest::collection::vec(0u8..6, 1..10),
            mask in proptest::collection::vec(any::<bool>(), 10),
        ) {
            prop_assert_eq!(deletions_between(&canon, &canon), 0);
            // start from a subsequence and re-insert matching phones one at a time
            let mut keep: Vec<bool> = canon.iter().enumerate().map(|(i, _)| mask[i]).collect();
            let realized = |keep: &[bool]| -> Vec<u8> {
                canon.iter().zip(keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect()
            };
            let mut last = deletions_between(&canon, &realized(&keep));
            for i in 0..canon.len() {
                if !keep[i] {
                    keep[i] = true;
                    let d = deletions_between(&canon, &realized(&keep));
                    prop_assert!(d <= last);
                    last = d;
                }
            }
            prop_assert_eq!(last, 0);
        }
    }
}
