//! Ingestion of the three external inputs: the token-level corpus TSV, the
//! word frequency list, and the text embedding table.

mod coverage;
mod embeddings;
mod lexicon;

pub use coverage::{validate_dataset, CoverageReport};
pub use embeddings::{parse_embeddings, EmbeddingTable};
pub use lexicon::{parse_frequency_list, FrequencyLexicon};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Age {
    Young,
    Old,
}

impl Sex {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "female" => Some(Sex::Female),
            "m" | "male" => Some(Sex::Male),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
        }
    }
}

impl Age {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "y" | "young" => Some(Age::Young),
            "o" | "old" => Some(Age::Old),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Age::Young => "young",
            Age::Old => "old",
        }
    }
}

/// One spoken word token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub token_index: u64,
    pub word: String,
    /// Dictionary (citation) transcription; `None` when the row had no label.
    pub canonical_phones: Option<Vec<String>>,
    pub realized_phones: Option<Vec<String>>,
    /// Precomputed deletion count, used when realized phones are absent.
    pub deletions: Option<u32>,
    pub start_s: f64,
    pub end_s: f64,
    pub phrase_id: String,
    pub speaker_id: String,
    pub sex: Option<Sex>,
    pub age: Option<Age>,
}

impl CorpusRecord {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Canonical column names of the corpus TSV.
pub const CANONICAL_COLUMNS: [&str; 11] = [
    "token_index",
    "word",
    "start",
    "end",
    "speaker",
    "sex",
    "age",
    "phrase_id",
    "canonical_phones",
    "realized_phones",
    "deletions",
];

const REQUIRED: [&str; 4] = ["word", "start", "end", "speaker"];

/// Maps canonical column names to the header names used by a particular export.
///
/// Unmapped canonical names are looked up verbatim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap(pub BTreeMap<String, String>);

impl ColumnMap {
    fn header_for<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.0.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOptions {
    pub columns: ColumnMap,
    /// Words starting with any of these characters are pause/noise markers.
    pub marker_chars: Vec<char>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            columns: ColumnMap::default(),
            marker_chars: vec!['<', '{'],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCorpus {
    pub records: Vec<CorpusRecord>,
    pub dropped: Vec<DroppedRow>,
    /// Pause/noise marker rows seen (excluded from records).
    pub markers: usize,
}

/// Lowercases a word and strips surrounding punctuation.
pub fn normalize_word(raw: &str) -> String {
    raw.trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

fn parse_phones(cell: &str) -> Option<Vec<String>> {
    let phones: Vec<String> = cell.split_whitespace().map(str::to_lowercase).collect();
    (!phones.is_empty()).then_some(phones)
}

fn parse_time(cell: &str, name: &str, line: usize) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            line,
            message: format!("non-numeric {name} time `{cell}`"),
        }),
    }
}

struct RawRow {
    line: usize,
    token_index: Option<u64>,
    record: Option<CorpusRecord>,
    marker: bool,
    explicit_phrase: bool,
}

/// Parses a corpus TSV into records ordered by `(speaker_id, token_index)`.
///
/// Rows missing a required field, or with `end <= start`, are dropped and
/// reported. Marker rows are excluded but close the current phrase when
/// phrase ids are derived rather than given.
pub fn parse_corpus<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<ParsedCorpus> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io("<corpus>", e))?,
        None => return Err(Error::EmptyInput("corpus has no header row".into())),
    };
    let header: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for canonical in CANONICAL_COLUMNS {
        let name = opts.columns.header_for(canonical);
        if let Some(pos) = header.iter().position(|h| *h == name) {
            index.insert(canonical, pos);
        }
    }
    for req in REQUIRED {
        if !index.contains_key(req) {
            return Err(Error::MissingColumn {
                column: opts.columns.header_for(req).to_string(),
            });
        }
    }

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        let cell = |name: &str| -> &str {
            index
                .get(name)
                .and_then(|&p| cells.get(p))
                .copied()
                .unwrap_or("")
                .trim()
        };

        let token_index = match cell("token_index") {
            "" => None,
            s => Some(s.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-integer token_index `{s}`"),
            })?),
        };

        let raw_word = cell("word");
        let speaker = cell("speaker");
        if raw_word
            .chars()
            .next()
            .is_some_and(|c| opts.marker_chars.contains(&c))
        {
            rows.push(RawRow {
                line: line_no,
                token_index,
                record: None,
                marker: true,
                explicit_phrase: false,
            });
            // Markers still need a speaker to close that speaker's phrase.
            if !speaker.is_empty() {
                rows.last_mut().unwrap().record = Some(CorpusRecord {
                    token_index: 0,
                    word: String::new(),
                    canonical_phones: None,
                    realized_phones: None,
                    deletions: None,
                    start_s: 0.0,
                    end_s: 0.0,
                    phrase_id: String::new(),
                    speaker_id: speaker.to_string(),
                    sex: None,
                    age: None,
                });
            }
            continue;
        }

        let start = parse_time(cell("start"), "start", line_no)?;
        let end = parse_time(cell("end"), "end", line_no)?;
        let word = normalize_word(raw_word);
        let mut missing = Vec::new();
        if word.is_empty() {
            missing.push("word");
        }
        if start.is_none() {
            missing.push("start");
        }
        if end.is_none() {
            missing.push("end");
        }
        if speaker.is_empty() {
            missing.push("speaker");
        }
        if !missing.is_empty() {
            dropped.push(DroppedRow {
                line: line_no,
                reason: format!("missing {}", missing.join(", ")),
            });
            continue;
        }
        let (start, end) = (start.unwrap(), end.unwrap());
        if end <= start {
            dropped.push(DroppedRow {
                line: line_no,
                reason: format!("end {end} <= start {start}"),
            });
            continue;
        }
        let deletions = match cell("deletions") {
            "" => None,
            s => Some(s.parse::<u32>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("deletions must be a non-negative integer, got `{s}`"),
            })?),
        };
        let phrase = cell("phrase_id");
        rows.push(RawRow {
            line: line_no,
            token_index,
            marker: false,
            explicit_phrase: !phrase.is_empty(),
            record: Some(CorpusRecord {
                token_index: 0,
                word,
                canonical_phones: parse_phones(cell("canonical_phones")),
                realized_phones: parse_phones(cell("realized_phones")),
                deletions,
                start_s: start,
                end_s: end,
                phrase_id: phrase.to_string(),
                speaker_id: speaker.to_string(),
                sex: Sex::parse(cell("sex")),
                age: Age::parse(cell("age")),
            }),
        });
    }

    // Assign ordinal positions per speaker in file order when none are given.
    let mut next_pos: HashMap<String, u64> = HashMap::new();
    for row in rows.iter_mut() {
        let Some(rec) = row.record.as_mut() else { continue };
        let pos = next_pos.entry(rec.speaker_id.clone()).or_insert(0);
        rec.token_index = row.token_index.unwrap_or(*pos);
        *pos = rec.token_index + 1;
    }
    let markers = rows.iter().filter(|r| r.marker).count();
    let mut rows: Vec<RawRow> = rows.into_iter().filter(|r| r.record.is_some()).collect();
    rows.sort_by(|a, b| {
        let (ra, rb) = (a.record.as_ref().unwrap(), b.record.as_ref().unwrap());
        (&ra.speaker_id, ra.token_index, a.line).cmp(&(&rb.speaker_id, rb.token_index, b.line))
    });

    // Derive phrase ids where absent (markers and speaker changes close a
    // phrase), then split any non-contiguous reuse of an id into separate runs.
    let mut records = Vec::with_capacity(rows.len());
    let mut derived_counter = 0usize;
    let mut prev_speaker: Option<String> = None;
    let mut seen_runs: HashMap<(String, String), usize> = HashMap::new();
    let mut prev_phrase: Option<String> = None;
    for row in rows {
        let mut rec = row.record.unwrap();
        if prev_speaker.as_deref() != Some(rec.speaker_id.as_str()) {
            derived_counter += 1;
            prev_phrase = None;
            prev_speaker = Some(rec.speaker_id.clone());
        }
        if row.marker {
            derived_counter += 1;
            prev_phrase = None;
            continue;
        }
        if !row.explicit_phrase {
            rec.phrase_id = format!("{}#{}", rec.speaker_id, derived_counter);
        }
        if prev_phrase.as_deref() != Some(rec.phrase_id.as_str()) {
            let key = (rec.speaker_id.clone(), rec.phrase_id.clone());
            let runs = seen_runs.entry(key).or_insert(0);
            *runs += 1;
            prev_phrase = Some(rec.phrase_id.clone());
            if *runs > 1 {
                rec.phrase_id = format!("{}~{}", rec.phrase_id, runs);
            }
        } else if let Some(runs) = seen_runs.get(&(rec.speaker_id.clone(), rec.phrase_id.clone())) {
            if *runs > 1 {
                rec.phrase_id = format!("{}~{}", rec.phrase_id, runs);
            }
        }
        records.push(rec);
    }

    Ok(ParsedCorpus {
        records,
        dropped,
        markers,
    })
}

impl fmt::Display for DroppedRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Writes records in the canonical TSV layout accepted by [`parse_corpus`].
pub fn write_corpus<W: Write>(mut out: W, records: &[CorpusRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", CANONICAL_COLUMNS.join("\t"))?;
    for r in records {
        let phones = |p: &Option<Vec<String>>| p.as_ref().map(|v| v.join(" ")).unwrap_or_default();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.token_index,
            r.word,
            r.start_s,
            r.end_s,
            r.speaker_id,
            r.sex.map(Sex::as_str).unwrap_or(""),
            r.age.map(Age::as_str).unwrap_or(""),
            r.phrase_id,
            phones(&r.canonical_phones),
            phones(&r.realized_phones),
            r.deletions.map(|d| d.to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ParsedCorpus> {
        parse_corpus(text.as_bytes(), &ParseOptions::default())
    }

    #[test]
    fn header_and_one_row() {
        let p = parse("word\tstart\tend\tspeaker\nwater\t0.0\t0.4\ts01\n").unwrap();
        assert_eq!(p.records.len(), 1);
        assert!(p.dropped.is_empty());
        assert_eq!(p.records[0].word, "water");
    }

    #[test]
    fn end_before_start_is_dropped() {
        let p = parse("word\tstart\tend\tspeaker\nwater\t0.5\t0.4\ts01\n").unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.dropped.len(), 1);
    }

    #[test]
    fn missing_word_reports_line() {
        let text = "word\tstart\tend\tspeaker\n\
                    give\t0.0\t0.2\ts01\n\
                    \t0.2\t0.3\ts01\n\
                    me\t0.3\t0.4\ts01\n";
        let p = parse(text).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.dropped.len(), 1);
        assert_eq!(p.dropped[0].line, 3);
    }

    #[test]
    fn missing_required_column() {
        let err = parse("word\tstart\tend\nwater\t0\t1\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column } if column == "speaker"));
    }

    #[test]
    fn non_numeric_time_is_a_line_error() {
        let err = parse("word\tstart\tend\tspeaker\na\t0\t1\ts\nb\tx\t2\ts\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn words_are_normalized() {
        assert_eq!(normalize_word(" \"Don't,"), "don't");
        assert_eq!(normalize_word("WATER."), "water");
    }

    #[test]
    fn markers_delimit_derived_phrases() {
        let text = "word\tstart\tend\tspeaker\n\
                    give\t0.0\t0.2\ts1\n\
                    me\t0.2\t0.3\ts1\n\
                    <SIL>\t0.3\t0.8\ts1\n\
                    water\t0.8\t1.2\ts1\n";
        let p = parse(text).unwrap();
        assert_eq!(p.markers, 1);
        assert_eq!(p.records.len(), 3);
        assert_eq!(p.records[0].phrase_id, p.records[1].phrase_id);
        assert_ne!(p.records[1].phrase_id, p.records[2].phrase_id);
    }

    #[test]
    fn column_map_adapts_headers() {
        let mut opts = ParseOptions::default();
        opts.columns.0.insert("word".into(), "Word".into());
        opts.columns.0.insert("speaker".into(), "Speaker".into());
        let p = parse_corpus(
            "Word\tstart\tend\tSpeaker\nhi\t0\t1\tS\n".as_bytes(),
            &opts,
        )
        .unwrap();
        assert_eq!(p.records[0].speaker_id, "S");
    }

    #[test]
    fn sorted_by_speaker_then_position() {
        let text = "token_index\tword\tstart\tend\tspeaker\n\
                    2\tc\t2\t3\tb\n\
                    1\tb\t1\t2\ta\n\
                    0\ta\t0\t1\ta\n";
        let p = parse(text).unwrap();
        let words: Vec<_> = p.records.iter().map(|r| r.word.as_str()).collect();
        assert_eq!(words, ["a", "b", "c"]);
    }
}
