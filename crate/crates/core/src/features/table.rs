use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumn {
    pub name: String,
    pub values: Vec<String>,
}

impl CategoricalColumn {
    /// Sorted distinct levels.
    pub fn levels(&self) -> Vec<String> {
        let mut l = self.values.clone();
        l.sort();
        l.dedup();
        l
    }
}

/// Column-oriented analysis dataset.
///
/// `response` holds the raw word duration; `label` its duration-range class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub n_rows: usize,
    pub response: Option<NumericColumn>,
    pub numeric: Vec<NumericColumn>,
    pub categorical: Vec<CategoricalColumn>,
    pub label: Option<Vec<String>>,
    /// Index of the source record for each row.
    pub provenance: Vec<usize>,
}

impl FeatureTable {
    /// Builds a table from named columns; provenance is the row index.
    pub fn from_columns(
        response: Option<(&str, Vec<f64>)>,
        numeric: Vec<(&str, Vec<f64>)>,
        categorical: Vec<(&str, Vec<String>)>,
    ) -> Result<Self> {
        let n_rows = response
            .as_ref()
            .map(|c| c.1.len())
            .or_else(|| numeric.first().map(|c| c.1.len()))
            .or_else(|| categorical.first().map(|c| c.1.len()))
            .unwrap_or(0);
        let col = |(name, values): (&str, Vec<f64>)| NumericColumn {
            name: name.to_string(),
            values,
        };
        let t = Self {
            n_rows,
            response: response.map(col),
            numeric: numeric.into_iter().map(col).collect(),
            categorical: categorical
                .into_iter()
                .map(|(name, values)| CategoricalColumn {
                    name: name.to_string(),
                    values,
                })
                .collect(),
            label: None,
            provenance: (0..n_rows).collect(),
        };
        t.check()?;
        Ok(t)
    }

    /// Looks up a numeric column, including the response.
    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        self.response
            .iter()
            .chain(&self.numeric)
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn categorical(&self, name: &str) -> Option<&CategoricalColumn> {
        self.categorical.iter().find(|c| c.name == name)
    }

    pub fn numeric_names(&self) -> Vec<&str> {
        self.numeric.iter().map(|c| c.name.as_str()).collect()
    }

    /// Row-major matrix over the named columns. Categorical columns are
    /// encoded as the index of their level in sorted order.
    pub fn matrix(&self, names: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(names.len());
        for name in names {
            if let Some(v) = self.numeric(name) {
                cols.push(v.to_vec());
            } else if let Some(c) = self.categorical(name) {
                let levels = c.levels();
                cols.push(
                    c.values
                        .iter()
                        .map(|v| levels.binary_search(v).unwrap() as f64)
                        .collect(),
                );
            } else {
                return Err(Error::UnknownFeature(name.clone()));
            }
        }
        Ok((0..self.n_rows).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
    }

    fn check(&self) -> Result<()> {
        let ok = self.provenance.len() == self.n_rows
            && self.response.as_ref().is_none_or(|c| c.values.len() == self.n_rows)
            && self.numeric.iter().all(|c| c.values.len() == self.n_rows)
            && self.categorical.iter().all(|c| c.values.len() == self.n_rows)
            && self.label.as_ref().is_none_or(|l| l.len() == self.n_rows);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("feature table columns differ in length".into()))
        }
    }

    /// Writes TSV with a typed header (`name:kind`). Kinds: `prov`,
    /// `response`, `num`, `cat`, `label`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["row:prov".to_string()];
        if let Some(r) = &self.response {
            header.push(format!("{}:response", r.name));
        }
        header.extend(self.numeric.iter().map(|c| format!("{}:num", c.name)));
        header.extend(self.categorical.iter().map(|c| format!("{}:cat", c.name)));
        if self.label.is_some() {
            header.push("label:label".into());
        }
        writeln!(out, "{}", header.join("\t"))?;
        for i in 0..self.n_rows {
            let mut cells = vec![self.provenance[i].to_string()];
            if let Some(r) = &self.response {
                cells.push(r.values[i].to_string());
            }
            cells.extend(self.numeric.iter().map(|c| c.values[i].to_string()));
            cells.extend(self.categorical.iter().map(|c| c.values[i].clone()));
            if let Some(l) = &self.label {
                cells.push(l[i].clone());
            }
            writeln!(out, "{}", cells.join("\t"))?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        enum Kind {
            Prov,
            Response,
            Num(usize),
            Cat(usize),
            Label,
        }
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::EmptyInput("feature table has no header".into()))?
            .map_err(|e| Error::io("<features>", e))?;
        let mut t = FeatureTable::default();
        let mut kinds = Vec::new();
        for h in header.split('\t') {
            let (name, kind) = h.rsplit_once(':').ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("untyped header `{h}`"),
            })?;
            kinds.push(match kind {
                "prov" => Kind::Prov,
                "response" => {
                    t.response = Some(NumericColumn { name: name.into(), values: vec![] });
                    Kind::Response
                }
                "num" => {
                    t.numeric.push(NumericColumn { name: name.into(), values: vec![] });
                    Kind::Num(t.numeric.len() - 1)
                }
                "cat" => {
                    t.categorical.push(CategoricalColumn { name: name.into(), values: vec![] });
                    Kind::Cat(t.categorical.len() - 1)
                }
                "label" => {
                    t.label = Some(vec![]);
                    Kind::Label
                }
                other => {
                    return Err(Error::Parse {
                        line: 1,
                        message: format!("unknown column kind `{other}`"),
                    })
                }
            });
        }
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line.map_err(|e| Error::io("<features>", e))?;
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != kinds.len() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} cells, found {}", kinds.len(), cells.len()),
                });
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("non-numeric value `{s}`"),
                })
            };
            for (kind, cell) in kinds.iter().zip(cells) {
                match kind {
                    Kind::Prov => t.provenance.push(cell.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad row index `{cell}`"),
                    })?),
                    Kind::Response => t.response.as_mut().unwrap().values.push(num(cell)?),
                    Kind::Num(j) => t.numeric[*j].values.push(num(cell)?),
                    Kind::Cat(j) => t.categorical[*j].values.push(cell.to_string()),
                    Kind::Label => t.label.as_mut().unwrap().push(cell.to_string()),
                }
            }
            t.n_rows += 1;
        }
        t.check()?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let t = FeatureTable {
            n_rows: 2,
            response: Some(NumericColumn { name: "WordDuration".into(), values: vec![0.1, 0.30000000000000004] }),
            numeric: vec![NumericColumn { name: "WordLength".into(), values: vec![3.0, 5.0] }],
            categorical: vec![CategoricalColumn { name: "Speaker".into(), values: vec!["s1".into(), "s2".into()] }],
            label: Some(vec!["1".into(), "2".into()]),
            provenance: vec![0, 3],
        };
        let mut buf = Vec::new();
        t.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("row:prov\tWordDuration:response\tWordLength:num\tSpeaker:cat\tlabel:label\n"));
        let back = FeatureTable::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn categorical_encoding() {
        let t = FeatureTable {
            n_rows: 3,
            categorical: vec![CategoricalColumn { name: "Sex".into(), values: vec!["male".into(), "female".into(), "male".into()] }],
            provenance: vec![0, 1, 2],
            ..Default::default()
        };
        assert_eq!(t.matrix(&["Sex".into()]).unwrap(), vec![vec![1.0], vec![0.0], vec![1.0]]);
        assert!(matches!(t.matrix(&["Nope".into()]), Err(Error::UnknownFeature(_))));
    }
}
