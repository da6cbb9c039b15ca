use std::collections::BTreeMap;
use std::ops::Range;

use crate::corpus::CorpusRecord;
use crate::error::{Error, Result};

use super::lexical::word_length;

/// Words per second over a phrase: word count divided by the span from the
/// first start to the last end.
pub fn phrase_rate(phrase: &[CorpusRecord]) -> Result<f64> {
    let Some(first) = phrase.first() else {
        return Err(Error::InvalidInput("empty phrase".into()));
    };
    let start = phrase.iter().map(|r| r.start_s).fold(f64::INFINITY, f64::min);
    let end = phrase.iter().map(|r| r.end_s).fold(f64::NEG_INFINITY, f64::max);
    let span = end - start;
    if span <= 0.0 {
        return Err(Error::DegeneratePhrase(first.phrase_id.clone()));
    }
    Ok(phrase.len() as f64 / span)
}

/// Contiguous runs of records sharing speaker and phrase id.
pub fn phrase_runs(records: &[CorpusRecord]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        let boundary = i == records.len()
            || records[i].speaker_id != records[i - 1].speaker_id
            || records[i].phrase_id != records[i - 1].phrase_id;
        if boundary {
            runs.push(start..i);
            start = i;
        }
    }
    if records.is_empty() {
        runs.clear();
    }
    runs
}

/// Per-record phrase statistics, each assigned identically to every word of
/// the phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseFeatures {
    pub rate: Vec<f64>,
    /// Letters in the phrase.
    pub letters: Vec<f64>,
    /// Words in the phrase.
    pub words: Vec<f64>,
    /// Mean phrase rate over the speaker's phrases.
    pub speaker_rate: Vec<f64>,
}

pub fn phrase_features(records: &[CorpusRecord]) -> Result<PhraseFeatures> {
    let n = records.len();
    let mut out = PhraseFeatures {
        rate: vec![0.0; n],
        letters: vec![0.0; n],
        words: vec![0.0; n],
        speaker_rate: vec![0.0; n],
    };
    let mut per_speaker: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let runs = phrase_runs(records);
    for run in &runs {
        let phrase = &records[run.clone()];
        let rate = phrase_rate(phrase)?;
        let letters: usize = phrase.iter().map(|r| word_length(&r.word)).sum();
        for i in run.clone() {
            out.rate[i] = rate;
            out.letters[i] = letters as f64;
            out.words[i] = phrase.len() as f64;
        }
        let e = per_speaker.entry(&phrase[0].speaker_id).or_insert((0.0, 0));
        e.0 += rate;
        e.1 += 1;
    }
    for (i, r) in records.iter().enumerate() {
        let (sum, count) = per_speaker[r.speaker_id.as_str()];
        out.speaker_rate[i] = sum / count as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, ParseOptions};

    fn recs(text: &str) -> Vec<CorpusRecord> {
        parse_corpus(text.as_bytes(), &ParseOptions::default()).unwrap().records
    }

    #[test]
    fn four_words_over_two_seconds() {
        let r = recs(
            "word\tstart\tend\tspeaker\tphrase_id\n\
             a\t0.0\t0.5\ts\tp\nb\t0.5\t1.0\ts\tp\nc\t1.0\t1.5\ts\tp\nd\t1.5\t2.0\ts\tp\n",
        );
        assert_eq!(phrase_rate(&r).unwrap(), 2.0);
        let f = phrase_features(&r).unwrap();
        assert!(f.rate.iter().all(|&x| x == 2.0));
        assert!(f.words.iter().all(|&x| x == 4.0));
        assert!(f.letters.iter().all(|&x| x == 4.0));
    }

    #[test]
    fn single_word_phrase() {
        let r = recs("word\tstart\tend\tspeaker\nwater\t1.0\t1.5\ts\n");
        assert_eq!(phrase_rate(&r).unwrap(), 2.0);
    }

    #[test]
    fn phrases_are_scoped() {
        let r = recs(
            "word\tstart\tend\tspeaker\tphrase_id\n\
             a\t0\t1\ts\tp1\nb\t1\t2\ts\tp1\nc\t2\t5\ts\tp2\n",
        );
        let f = phrase_features(&r).unwrap();
        assert_eq!(f.rate[0], 1.0);
        assert_eq!(f.rate[2], 1.0 / 3.0);
        assert_eq!(f.speaker_rate[0], (1.0 + 1.0 / 3.0) / 2.0);
        assert_eq!(phrase_runs(&r), vec![0..2, 2..3]);
    }

    #[test]
    fn zero_span_is_degenerate() {
        let mut r = recs("word\tstart\tend\tspeaker\na\t0\t1\ts\n");
        r[0].end_s = r[0].start_s;
        assert!(matches!(phrase_rate(&r), Err(Error::DegeneratePhrase(_))));
    }
}
