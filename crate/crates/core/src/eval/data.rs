//! Query and gold-set files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::retriever::Query;
use crate::vector::normalized;

/// One line of a query file. `embedding` is unit-normalized on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl QueryRecord {
    pub fn category(&self) -> Option<&str> {
        self.metadata.get("category").map(String::as_str)
    }

    pub fn to_query(&self) -> Query {
        Query {
            id: self.query_id.clone(),
            embedding: self.embedding.clone(),
        }
    }
}

pub fn read_queries(path: impl AsRef<Path>) -> Result<Vec<QueryRecord>> {
    parse_queries(BufReader::new(File::open(path)?))
}

pub fn parse_queries(reader: impl BufRead) -> Result<Vec<QueryRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_query_line(&line, line_no)?);
    }
    Ok(out)
}

/// Parses and normalizes one non-blank query line.
pub fn parse_query_line(line: &str, line_no: usize) -> Result<QueryRecord> {
    let mut q: QueryRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    q.embedding = normalized(&q.embedding).ok_or_else(|| Error::ZeroNorm {
        line: line_no,
        id: q.query_id.clone(),
    })?;
    Ok(q)
}

pub fn write_jsonl<T: Serialize>(
    path: impl AsRef<Path>,
    items: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Relevant memory ids per query.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoldSet(pub BTreeMap<String, Vec<String>>);

impl GoldSet {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Gold taken from the `gold` field of each query line; queries without one are skipped.
    pub fn from_queries(queries: &[QueryRecord]) -> Self {
        GoldSet(
            queries
                .iter()
                .filter_map(|q| q.gold.clone().map(|g| (q.query_id.clone(), g)))
                .collect(),
        )
    }

    pub fn get(&self, query_id: &str) -> Option<&[String]> {
        self.0.get(query_id).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every gold id must exist in the corpus.
    pub fn validate(&self, index: &CorpusIndex) -> Result<()> {
        for ids in self.0.values() {
            if let Some(missing) = ids.iter().find(|id| index.row_of(id).is_none()) {
                return Err(Error::UnknownId(missing.clone()));
            }
        }
        Ok(())
    }
}
