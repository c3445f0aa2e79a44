//! Labeled data-point tables built from corpora.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{data_point_names, extract_features, AnchorPolicy, Scenario};
use crate::snapshot::{Corpus, Label};

/// Classification target. Index 0 is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Unmaintained = 0,
    Active = 1,
}

impl Class {
    pub const ORDER: [Class; 2] = [Class::Unmaintained, Class::Active];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Unmaintained => "unmaintained",
            Class::Active => "active",
        }
    }

    pub fn from_label(label: Label) -> Option<Class> {
        match label {
            Label::Active => Some(Class::Active),
            Label::Unmaintained => Some(Class::Unmaintained),
            Label::Unlabeled => None,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "active" => Ok(Class::Active),
            "unmaintained" => Ok(Class::Unmaintained),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

/// One row per repository, one column per data point.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub repo_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Option<Class>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Extracts features for every corpus entry. Fails on the first entry
    /// that cannot be extracted.
    pub fn from_corpus(corpus: &Corpus, scenario: Scenario, anchor: AnchorPolicy) -> Result<Dataset> {
        let (ds, skipped) = Self::build(corpus, scenario, anchor)?;
        match skipped.into_iter().next() {
            Some((_, err)) => Err(err),
            None => Ok(ds),
        }
    }

    /// Like [`Dataset::from_corpus`] but skips entries whose history is too
    /// short, returning them with their errors.
    pub fn from_corpus_lenient(
        corpus: &Corpus,
        scenario: Scenario,
        anchor: AnchorPolicy,
    ) -> Result<(Dataset, Vec<(String, Error)>)> {
        Self::build(corpus, scenario, anchor)
    }

    fn build(
        corpus: &Corpus,
        scenario: Scenario,
        anchor: AnchorPolicy,
    ) -> Result<(Dataset, Vec<(String, Error)>)> {
        let extracted: Vec<Result<Vec<f64>>> = corpus
            .entries
            .par_iter()
            .map(|e| {
                let at = anchor.resolve(&e.snapshot)?;
                Ok(extract_features(&e.snapshot, scenario, Some(at))?.flatten().values)
            })
            .collect();
        let mut ds = Dataset {
            columns: data_point_names(scenario),
            repo_ids: Vec::new(),
            rows: Vec::new(),
            labels: Vec::new(),
        };
        let mut skipped = Vec::new();
        for (entry, result) in corpus.entries.iter().zip(extracted) {
            match result {
                Ok(values) => {
                    ds.repo_ids.push(entry.snapshot.repo_id());
                    ds.rows.push(values);
                    ds.labels.push(Class::from_label(entry.label));
                }
                Err(e @ (Error::InsufficientHistory { .. } | Error::NoCommits(_))) => {
                    skipped.push((entry.snapshot.repo_id(), e))
                }
                Err(e) => return Err(e),
            }
        }
        Ok((ds, skipped))
    }

    /// Rows with a known label.
    pub fn labeled(&self) -> Dataset {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i].is_some()).collect();
        self.subset(&keep)
    }

    /// Labels of a fully labeled dataset.
    pub fn classes(&self) -> Result<Vec<Class>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| {
                    Error::malformed("dataset", format!("row {}", self.repo_ids[i]), "unlabeled row")
                })
            })
            .collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            repo_ids: rows.iter().map(|&i| self.repo_ids[i].clone()).collect(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Projects onto `columns`, in that order.
    pub fn select_columns(&self, columns: &[String]) -> Result<Dataset> {
        let idx: Vec<usize> = columns
            .iter()
            .map(|c| {
                self.columns
                    .iter()
                    .position(|x| x == c)
                    .ok_or_else(|| Error::ColumnMismatch(format!("missing column {c}")))
            })
            .collect::<Result<_>>()?;
        Ok(Dataset {
            columns: columns.to_vec(),
            repo_ids: self.repo_ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    /// CSV with a leading `repo` column, the data points, and a trailing
    /// `label` column (empty when unknown).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let ctx = |source| Error::Csv {
            context: "dataset".into(),
            source,
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["repo".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("label".into());
        w.write_record(&header).map_err(ctx)?;
        for ((id, row), label) in self.repo_ids.iter().zip(&self.rows).zip(&self.labels) {
            let mut rec = Vec::with_capacity(row.len() + 2);
            rec.push(id.clone());
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(label.map(|l| l.to_string()).unwrap_or_default());
            w.write_record(&rec).map_err(ctx)?;
        }
        w.flush().map_err(|e| Error::Csv {
            context: "dataset".into(),
            source: e.into(),
        })
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Dataset> {
        let ctx = |source| Error::Csv {
            context: "dataset".into(),
            source,
        };
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers().map_err(ctx)?.iter().map(String::from).collect();
        if header.len() < 2 || header[0] != "repo" || header[header.len() - 1] != "label" {
            return Err(Error::malformed("dataset", "header", "expected repo,...,label"));
        }
        let columns = header[1..header.len() - 1].to_vec();
        let mut ds = Dataset {
            columns,
            repo_ids: Vec::new(),
            rows: Vec::new(),
            labels: Vec::new(),
        };
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(ctx)?;
            let n = rec.len();
            ds.repo_ids.push(rec[0].to_string());
            let row = (1..n - 1)
                .map(|i| {
                    rec[i].parse::<f64>().map_err(|e| {
                        Error::malformed("dataset", format!("row {} col {}", line + 2, header[i]), e.to_string())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ds.rows.push(row);
            let label = &rec[n - 1];
            ds.labels.push(if label.is_empty() {
                None
            } else {
                Some(label.parse().map_err(|e: String| {
                    Error::malformed("dataset", format!("row {}.label", line + 2), e)
                })?)
            });
        }
        Ok(ds)
    }
}
