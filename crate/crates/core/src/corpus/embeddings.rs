use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Word → dense vector map with a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("embedding dimension must be >= 1".into()));
        }
        Ok(Self {
            dimension,
            vectors: HashMap::new(),
        })
    }

    /// Inserts a vector; the first vector stored for a word wins.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::InvalidInput(format!(
                "vector has length {}, table dimension is {}",
                vector.len(),
                self.dimension
            )));
        }
        self.vectors.entry(word.into()).or_insert(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dimension: self.dimension,
            vectors: self
                .vectors
                .iter()
                .map(|(w, v)| (w.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
        }
    }
}

/// Parses `word v1 ... vD` lines. An optional leading `N D` header line is
/// accepted. The dimension comes from the header, `expected_dim`, or the
/// first vector, in that order of precedence.
pub fn parse_embeddings<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<EmbeddingTable> {
    let mut dim = expected_dim;
    let mut table: Option<EmbeddingTable> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<embeddings>", e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();

        if line_no == 1 && rest.len() == 1 {
            if let (Ok(_n), Ok(d)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                if let Some(e) = expected_dim {
                    if e != d {
                        return Err(Error::Parse {
                            line: 1,
                            message: format!("header dimension {d} differs from expected {e}"),
                        });
                    }
                }
                dim = Some(d);
                continue;
            }
        }

        let mut vector = Vec::with_capacity(rest.len());
        for tok in &rest {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => vector.push(v),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("non-finite or non-numeric component `{tok}`"),
                    })
                }
            }
        }
        let d = *dim.get_or_insert(vector.len());
        if vector.len() != d {
            return Err(Error::Parse {
                line: line_no,
                message: format!("dimension mismatch: expected {d}, found {}", vector.len()),
            });
        }
        if table.is_none() {
            table = Some(EmbeddingTable::new(d).map_err(|_| Error::Parse {
                line: line_no,
                message: "embedding vector has no components".into(),
            })?);
        }
        table.as_mut().unwrap().insert(word.to_lowercase(), vector)?;
    }
    table.ok_or_else(|| Error::EmptyInput("embedding table has no vectors".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        let t = parse_embeddings("a 1 0\nb 0 1".as_bytes(), None).unwrap();
        assert_eq!(t.dimension(), 2);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn mismatch_names_line() {
        let err = parse_embeddings("a 1 0\nb 1".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn header_line_sets_dimension() {
        let t = parse_embeddings("2 3\na 1 0 0\nb 0 1 0\n".as_bytes(), None).unwrap();
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn non_finite_rejected() {
        let err = parse_embeddings("a 1 NaN\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn expected_dim_enforced() {
        assert!(parse_embeddings("a 1 0\n".as_bytes(), Some(3)).is_err());
    }
}
