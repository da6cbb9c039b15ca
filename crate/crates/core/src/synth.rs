//! Seeded mini-corpus with known structure, standing in for licensed data.
//!
//! Short words are frequent (a planted negative length–frequency
//! correlation), frequencies follow a power law, embeddings cluster by
//! topic, and every word type is covered by the lexicon and embeddings.

use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{write_corpus, Age, CorpusRecord, Sex};
use crate::seed;

const CONSONANTS: [(char, &str); 14] = [
    ('b', "b"),
    ('d', "d"),
    ('g', "g"),
    ('k', "k"),
    ('m', "m"),
    ('n', "n"),
    ('p', "p"),
    ('s', "s"),
    ('t', "t"),
    ('l', "l"),
    ('r', "r"),
    ('f', "f"),
    ('v', "v"),
    ('z', "z"),
];
const VOWELS: [(char, &str); 5] = [('a', "aa"), ('e', "eh"), ('i', "iy"), ('o', "ow"), ('u', "uw")];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub tokens: usize,
    pub speakers: usize,
    pub vocabulary: usize,
    pub dimension: usize,
    pub topics: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            tokens: 5000,
            speakers: 8,
            vocabulary: 300,
            dimension: 16,
            topics: 6,
            zipf_exponent: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWord {
    pub word: String,
    pub phones: Vec<String>,
    pub topic: usize,
    pub count: u64,
}

/// Sign of a relation planted by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSign {
    pub a: String,
    pub b: String,
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub params: SynthParams,
    pub records: Vec<CorpusRecord>,
    pub vocabulary: Vec<SynthWord>,
    pub embeddings: Vec<(String, Vec<f64>)>,
    /// Marginal correlation signs.
    pub planted: Vec<PlantedSign>,
    /// Signs of effects on duration with the other covariates held fixed.
    pub partial: Vec<PlantedSign>,
}

fn make_word(rng: &mut impl Rng, syllables: usize) -> (String, Vec<String>) {
    let mut word = String::new();
    let mut phones = Vec::new();
    for _ in 0..syllables {
        let (c, cp) = CONSONANTS[rng.random_range(0..CONSONANTS.len())];
        let (v, vp) = VOWELS[rng.random_range(0..VOWELS.len())];
        word.push(c);
        word.push(v);
        phones.push(cp.to_string());
        phones.push(vp.to_string());
    }
    if rng.random::<f64>() < 0.4 {
        let (c, cp) = CONSONANTS[rng.random_range(0..CONSONANTS.len())];
        word.push(c);
        phones.push(cp.to_string());
    }
    (word, phones)
}

pub fn generate(params: &SynthParams) -> SynthCorpus {
    let mut rng = seed::task_rng(params.seed, 0);
    let unit = Normal::new(0.0, 1.0).unwrap();

    // vocabulary, sorted so that shorter words take the frequent ranks
    let mut seen = BTreeSet::new();
    let mut words = Vec::with_capacity(params.vocabulary);
    while words.len() < params.vocabulary {
        let syl = 1 + (rng.random::<f64>().powf(1.3) * 4.0) as usize;
        let (w, p) = make_word(&mut rng, syl.min(4));
        if seen.insert(w.clone()) {
            let jitter: f64 = unit.sample(&mut rng) * 1.2;
            words.push((w.len() as f64 + jitter, w, p));
        }
    }
    words.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let weights: Vec<f64> = (1..=words.len()).map(|r| (r as f64).powf(-params.zipf_exponent)).collect();
    let total_w: f64 = weights.iter().sum();
    let vocabulary: Vec<SynthWord> = words
        .into_iter()
        .zip(&weights)
        .map(|((_, word, phones), w)| SynthWord {
            word,
            phones,
            topic: rng.random_range(0..params.topics),
            count: 1 + (2.0e6 * w / total_w).round() as u64,
        })
        .collect();

    let centroids: Vec<Vec<f64>> = (0..params.topics)
        .map(|_| (0..params.dimension).map(|_| unit.sample(&mut rng)).collect())
        .collect();
    let embeddings: Vec<(String, Vec<f64>)> = vocabulary
        .iter()
        .map(|w| {
            let v = centroids[w.topic].iter().map(|c| c + 0.5 * unit.sample(&mut rng)).collect();
            (w.word.clone(), v)
        })
        .collect();

    let cumulative = |idx: &[usize]| -> Vec<f64> {
        let mut acc = 0.0;
        idx.iter()
            .map(|&i| {
                acc += weights[i];
                acc
            })
            .collect()
    };
    let all: Vec<usize> = (0..vocabulary.len()).collect();
    let global = cumulative(&all);
    let by_topic: Vec<(Vec<usize>, Vec<f64>)> = (0..params.topics)
        .map(|t| {
            let idx: Vec<usize> = all.iter().copied().filter(|&i| vocabulary[i].topic == t).collect();
            let cum = cumulative(&idx);
            (idx, cum)
        })
        .collect();
    let draw = |rng: &mut seed::TaskRng, idx: Option<&[usize]>, cum: &[f64]| -> usize {
        let u = rng.random::<f64>() * cum.last().copied().unwrap_or(0.0);
        let k = cum.partition_point(|&c| c < u).min(cum.len() - 1);
        idx.map_or(k, |ix| ix[k])
    };

    // speakers: alternating sex, age in pairs
    let speakers: Vec<(String, Sex, Age, f64, f64)> = (0..params.speakers)
        .map(|s| {
            let sex = if s % 2 == 0 { Sex::Female } else { Sex::Male };
            let age = if (s / 2) % 2 == 0 { Age::Young } else { Age::Old };
            let offset = 0.02 * unit.sample(&mut rng);
            let tempo = 1.0 + 0.1 * unit.sample(&mut rng);
            (format!("s{:02}", s + 1), sex, age, offset, tempo)
        })
        .collect();
    let sex_effect = |s: Sex| if s == Sex::Male { -0.008 } else { 0.008 };
    let age_effect = |a: Age| if a == Age::Old { 0.01 } else { -0.01 };
    let mean_log_count = vocabulary.iter().map(|w| (w.count as f64).ln()).sum::<f64>() / vocabulary.len() as f64;
    let noise = Normal::new(0.0, 0.025).unwrap();

    let per_speaker = params.tokens / params.speakers.max(1);
    let mut records = Vec::with_capacity(params.tokens);
    for (si, (spk, sex, age, offset, tempo)) in speakers.iter().enumerate() {
        let quota = if si + 1 == params.speakers { params.tokens - per_speaker * (params.speakers - 1) } else { per_speaker };
        let mut t = 0.0;
        let mut pos = 0u64;
        let mut phrase = 0;
        let mut produced = 0;
        while produced < quota {
            phrase += 1;
            let len = rng.random_range(2..=8).min(quota - produced);
            let topic = rng.random_range(0..params.topics);
            for _ in 0..len {
                let wi = if rng.random::<f64>() < 0.6 && !by_topic[topic].0.is_empty() {
                    draw(&mut rng, Some(&by_topic[topic].0), &by_topic[topic].1)
                } else {
                    draw(&mut rng, None, &global)
                };
                let w = &vocabulary[wi];
                let freq_z = (w.count as f64).ln() - mean_log_count;
                let keep_p = 0.92 - 0.02 * freq_z.max(0.0);
                let mut realized: Vec<String> = Vec::with_capacity(w.phones.len());
                for (k, p) in w.phones.iter().enumerate() {
                    if k == 0 || rng.random::<f64>() < keep_p {
                        realized.push(p.clone());
                    }
                }
                let deletions = (w.phones.len() - realized.len()) as f64;
                let syll = w.phones.iter().filter(|p| p.len() == 2 && "aeiou".contains(&p[..1])).count() as f64;
                let dur = (0.06
                    + 0.028 * w.word.len() as f64
                    + 0.015 * syll
                    - 0.012 * freq_z
                    - 0.03 * deletions
                    + offset
                    + sex_effect(*sex)
                    + age_effect(*age)
                    + noise.sample(&mut rng))
                    * tempo;
                let dur = (dur.max(0.03) * 1000.0).round() / 1000.0;
                records.push(CorpusRecord {
                    token_index: pos,
                    word: w.word.clone(),
                    canonical_phones: Some(w.phones.clone()),
                    realized_phones: Some(realized),
                    deletions: None,
                    start_s: round_ms(t),
                    end_s: round_ms(t + dur),
                    phrase_id: format!("{spk}-p{phrase:04}"),
                    speaker_id: spk.clone(),
                    sex: Some(*sex),
                    age: Some(*age),
                });
                t = round_ms(t + dur);
                pos += 1;
                produced += 1;
            }
            // pause between phrases, written as a marker row
            pos += 1;
            t = round_ms(t + 0.25 + 0.2 * rng.random::<f64>());
        }
    }
    SynthCorpus {
        params: params.clone(),
        records,
        vocabulary,
        embeddings,
        planted: vec![
            PlantedSign { a: "WordLength".into(), b: "LogWordFreq".into(), sign: -1 },
            PlantedSign { a: "WordLength".into(), b: "WordDuration".into(), sign: 1 },
            PlantedSign { a: "LogWordFreq".into(), b: "WordDuration".into(), sign: -1 },
            PlantedSign { a: "PhraseRate".into(), b: "WordDuration".into(), sign: -1 },
        ],
        partial: vec![
            PlantedSign { a: "WordLength".into(), b: "WordDuration".into(), sign: 1 },
            PlantedSign { a: "LogWordFreq".into(), b: "WordDuration".into(), sign: -1 },
            PlantedSign { a: "Deletions".into(), b: "WordDuration".into(), sign: -1 },
        ],
    }
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

impl SynthCorpus {
    /// Corpus TSV with a `<SIL>` marker row closing every phrase.
    pub fn write_corpus<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut buf = Vec::new();
        write_corpus(&mut buf, &self.records)?;
        let text = String::from_utf8(buf).expect("utf-8 corpus");
        let mut lines = text.lines();
        writeln!(out, "{}", lines.next().unwrap_or_default())?;
        for (line, (i, r)) in lines.zip(self.records.iter().enumerate()) {
            writeln!(out, "{line}")?;
            let last_in_phrase = self.records.get(i + 1).is_none_or(|n| n.phrase_id != r.phrase_id);
            if last_in_phrase {
                writeln!(
                    out,
                    "{}\t<SIL>\t{}\t{}\t{}\t\t\t\t\t\t",
                    r.token_index + 1,
                    r.end_s,
                    round_ms(r.end_s + 0.25),
                    r.speaker_id
                )?;
            }
        }
        Ok(())
    }

    pub fn write_lexicon<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut words: Vec<&SynthWord> = self.vocabulary.iter().collect();
        words.sort_by(|a, b| a.word.cmp(&b.word));
        for w in words {
            writeln!(out, "{}\t{}", w.word, w.count)?;
        }
        Ok(())
    }

    pub fn write_embeddings<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.embeddings.len(), self.params.dimension)?;
        let mut rows: Vec<&(String, Vec<f64>)> = self.embeddings.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        for (w, v) in rows {
            let cells: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
            writeln!(out, "{w} {}", cells.join(" "))?;
        }
        Ok(())
    }
}
