//! Attention-aware semantic relevance of a word to its preceding context.
//!
//! A target word is compared against each of its `m` preceding words, and
//! consecutive context words are compared against each other. Every cosine
//! similarity is weighted by the proximity of the pair to the target, where
//! distance counts words back from the target (the target itself is 0):
//!
//! ```text
//! w(d_i, d_j) = 2 / (d_i + d_j + 1)
//! ```
//!
//! For `m = 3` this gives 1, 2/3 and 1/2 for the target against distances 1,
//! 2 and 3, and 1/2, 1/3 for the context pairs (1,2) and (2,3).

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusRecord, EmbeddingTable};
use crate::error::{Error, Result};

/// Cosine of the angle between `u` and `v`; 0 when either has zero norm.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Exact proximity weight for a pair at distances `d_i`, `d_j` from the target.
pub fn pair_weight_exact(d_i: u32, d_j: u32) -> Ratio<u32> {
    Ratio::new(2, d_i + d_j + 1)
}

pub fn pair_weight(d_i: u32, d_j: u32) -> f64 {
    2.0 / f64::from(d_i + d_j + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `2 / (d_i + d_j + 1)`.
    #[default]
    Proximity,
    /// Every pair weighted 1 (the unweighted sum).
    Uniform,
}

impl WeightScheme {
    pub fn weight(self, d_i: u32, d_j: u32) -> f64 {
        match self {
            WeightScheme::Proximity => pair_weight(d_i, d_j),
            WeightScheme::Uniform => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowOptions {
    /// Number of preceding words considered.
    pub size: usize,
    /// Also compare non-consecutive context words.
    pub include_nonadjacent: bool,
    pub scheme: WeightScheme,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            size: 3,
            include_nonadjacent: false,
            scheme: WeightScheme::Proximity,
        }
    }
}

/// A target word and its preceding words, nearest last.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextWindow<'a> {
    pub target: &'a str,
    pub context: Vec<&'a str>,
}

impl<'a> ContextWindow<'a> {
    /// Keeps at most `size` words, dropping the farthest.
    pub fn new(target: &'a str, preceding: &[&'a str], size: usize) -> Self {
        let start = preceding.len().saturating_sub(size);
        Self {
            target,
            context: preceding[start..].to_vec(),
        }
    }

    /// Distance of `context[k]` from the target (the adjacent word is 1).
    pub fn distance(&self, k: usize) -> u32 {
        (self.context.len() - k) as u32
    }

    /// Pairs `(d_i, d_j)` entering the sum, target pairs first.
    pub fn pairs(&self, include_nonadjacent: bool) -> Vec<(u32, u32)> {
        let l = self.context.len() as u32;
        let mut out: Vec<(u32, u32)> = (1..=l).rev().map(|d| (0, d)).collect();
        for far in (2..=l).rev() {
            for near in (1..far).rev() {
                if include_nonadjacent || far - near == 1 {
                    out.push((near, far));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceStatus {
    Ok,
    EmptyContext,
    MissingTarget,
}

impl RelevanceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RelevanceStatus::Ok => "ok",
            RelevanceStatus::EmptyContext => "empty_context",
            RelevanceStatus::MissingTarget => "missing_target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relevance {
    pub score: f64,
    pub status: RelevanceStatus,
}

/// Weighted similarity sum for one window. Context words without an
/// embedding contribute nothing.
pub fn semantic_relevance(
    window: &ContextWindow<'_>,
    embeddings: &EmbeddingTable,
    opts: &WindowOptions,
) -> Relevance {
    let Some(target) = embeddings.get(window.target) else {
        return Relevance {
            score: 0.0,
            status: RelevanceStatus::MissingTarget,
        };
    };
    if window.context.is_empty() {
        return Relevance {
            score: 0.0,
            status: RelevanceStatus::EmptyContext,
        };
    }
    let l = window.context.len();
    let vec_at = |d: u32| -> Option<&[f64]> {
        if d == 0 {
            Some(target)
        } else {
            embeddings.get(window.context[l - d as usize])
        }
    };
    let score = window
        .pairs(opts.include_nonadjacent)
        .into_iter()
        .map(|(a, b)| match (vec_at(a), vec_at(b)) {
            // Both vectors come from one table, so dimensions agree.
            (Some(u), Some(v)) => cosine_similarity(u, v).unwrap_or(0.0) * opts.scheme.weight(a, b),
            _ => 0.0,
        })
        .sum();
    Relevance {
        score,
        status: RelevanceStatus::Ok,
    }
}

/// Per-record relevance scores aligned with the input record order.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceSeries {
    pub scores: Vec<f64>,
    pub status: Vec<RelevanceStatus>,
}

impl RelevanceSeries {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Scores every record against the preceding words of its own phrase.
/// Windows reset at phrase and speaker boundaries.
pub fn annotate_corpus(
    records: &[CorpusRecord],
    embeddings: &EmbeddingTable,
    opts: &WindowOptions,
) -> RelevanceSeries {
    let mut scores = Vec::with_capacity(records.len());
    let mut status = Vec::with_capacity(records.len());
    let mut run_start = 0;
    for (i, rec) in records.iter().enumerate() {
        if i > 0 {
            let prev = &records[i - 1];
            if prev.speaker_id != rec.speaker_id || prev.phrase_id != rec.phrase_id {
                run_start = i;
            }
        }
        let preceding: Vec<&str> = records[run_start..i].iter().map(|r| r.word.as_str()).collect();
        let window = ContextWindow::new(&rec.word, &preceding, opts.size);
        let r = semantic_relevance(&window, embeddings, opts);
        scores.push(r.score);
        status.push(r.status);
    }
    RelevanceSeries { scores, status }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, ParseOptions};

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(rows[0].1.len()).unwrap();
        for (w, v) in rows {
            t.insert(*w, v.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn five_weights_are_exact() {
        assert_eq!(pair_weight_exact(0, 3), Ratio::new(1, 2));
        assert_eq!(pair_weight_exact(0, 2), Ratio::new(2, 3));
        assert_eq!(pair_weight_exact(0, 1), Ratio::new(1, 1));
        assert_eq!(pair_weight_exact(2, 3), Ratio::new(1, 3));
        assert_eq!(pair_weight_exact(1, 2), Ratio::new(1, 2));
    }

    #[test]
    fn window_pairs_for_three_words() {
        let w = ContextWindow::new("water", &["give", "me", "some"], 3);
        assert_eq!(w.pairs(false), vec![(0, 3), (0, 2), (0, 1), (2, 3), (1, 2)]);
        assert_eq!(w.pairs(true).len(), 6);
        assert_eq!(w.distance(0), 3);
    }

    #[test]
    fn identical_vectors_sum_weights() {
        let t = table(&[("give", &[1.0, 0.0]), ("me", &[1.0, 0.0]), ("some", &[1.0, 0.0]), ("water", &[1.0, 0.0])]);
        let w = ContextWindow::new("water", &["give", "me", "some"], 3);
        let r = semantic_relevance(&w, &t, &WindowOptions::default());
        assert!((r.score - 3.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_vectors_score_zero() {
        let t = table(&[
            ("a", &[1.0, 0.0, 0.0, 0.0]),
            ("b", &[0.0, 1.0, 0.0, 0.0]),
            ("c", &[0.0, 0.0, 1.0, 0.0]),
            ("d", &[0.0, 0.0, 0.0, 1.0]),
        ]);
        let w = ContextWindow::new("d", &["a", "b", "c"], 3);
        assert_eq!(semantic_relevance(&w, &t, &WindowOptions::default()).score, 0.0);
    }

    #[test]
    fn single_context_word_is_its_similarity() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[1.0, 1.0])]);
        let w = ContextWindow::new("b", &["a"], 3);
        let r = semantic_relevance(&w, &t, &WindowOptions::default());
        assert!((r.score - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn missing_target_and_empty_context() {
        let t = table(&[("a", &[1.0])]);
        let r = semantic_relevance(&ContextWindow::new("zzz", &["a"], 3), &t, &WindowOptions::default());
        assert_eq!(r.status, RelevanceStatus::MissingTarget);
        let r = semantic_relevance(&ContextWindow::new("a", &[], 3), &t, &WindowOptions::default());
        assert_eq!(r.status, RelevanceStatus::EmptyContext);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn missing_context_word_contributes_nothing() {
        let t = table(&[("a", &[1.0, 0.0]), ("t", &[1.0, 0.0])]);
        let r = semantic_relevance(&ContextWindow::new("t", &["a", "oov"], 3), &t, &WindowOptions::default());
        // only target-vs-"a" at distance 2 survives
        assert!((r.score - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn windows_reset_at_phrase_boundaries() {
        let text = "word\tstart\tend\tspeaker\tphrase_id\n\
                    give\t0\t1\ts\tp1\n\
                    me\t1\t2\ts\tp1\n\
                    water\t2\t3\ts\tp2\n";
        let recs = parse_corpus(text.as_bytes(), &ParseOptions::default()).unwrap().records;
        let t = table(&[("give", &[1.0]), ("me", &[1.0]), ("water", &[1.0])]);
        let s = annotate_corpus(&recs, &t, &WindowOptions::default());
        assert_eq!(s.status, vec![RelevanceStatus::EmptyContext, RelevanceStatus::Ok, RelevanceStatus::EmptyContext]);
        assert_eq!(s.scores[1], 1.0);
    }
}
