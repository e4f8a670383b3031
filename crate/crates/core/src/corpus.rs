//! In-memory corpus of memory fragments with exact top-K inner-product search.
//!
//! Rows keep file order. Embeddings are renormalized to unit length on the way
//! in, so inner product and cosine similarity coincide.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{dot, normalized};

/// One memory fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl MemoryRecord {
    pub fn new(id: impl Into<String>, embedding: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            text: None,
            embedding,
            metadata: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredId {
    pub id: String,
    pub score: f64,
}

/// Global result order: score descending, then id ascending.
#[inline]
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// A ranked list of `(id, score)` pairs in [`rank_order`], without duplicate ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoredList(Vec<ScoredId>);

impl ScoredList {
    /// Sorts `entries` into rank order. Duplicate ids are a caller bug.
    pub fn from_unsorted(mut entries: Vec<ScoredId>) -> Self {
        entries.sort_by(|a, b| rank_order(a.score, &a.id, b.score, &b.id));
        debug_assert!({
            let mut seen = HashSet::new();
            entries.iter().all(|e| seen.insert(e.id.as_str()))
        });
        Self(entries)
    }

    pub fn entries(&self) -> &[ScoredId] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<ScoredId> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoredId> {
        self.0.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|e| e.id.as_str())
    }

    pub fn scores(&self) -> Vec<f64> {
        self.0.iter().map(|e| e.score).collect()
    }

    /// The first `k` entries.
    pub fn prefix(&self, k: usize) -> ScoredList {
        ScoredList(self.0.iter().take(k).cloned().collect())
    }

    /// True when the entries are in rank order with unique ids.
    pub fn is_ranked(&self) -> bool {
        let mut seen = HashSet::new();
        self.0
            .windows(2)
            .all(|w| rank_order(w[0].score, &w[0].id, w[1].score, &w[1].id) == Ordering::Less)
            && self.0.iter().all(|e| seen.insert(e.id.as_str()))
    }
}

impl<'a> IntoIterator for &'a ScoredList {
    type Item = &'a ScoredId;
    type IntoIter = std::slice::Iter<'a, ScoredId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A scored corpus row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub row: usize,
    pub score: f64,
}

/// Row-level search output together with the number of similarity evaluations spent.
#[derive(Debug, Clone)]
pub struct RowSearch {
    pub hits: Vec<Hit>,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct RowMeta {
    id: String,
    text: Option<String>,
    metadata: BTreeMap<String, String>,
}

/// Euclidean norms of the embeddings as they were supplied, before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Immutable in-memory index over unit-normalized embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    dimension: usize,
    rows: Vec<RowMeta>,
    matrix: Vec<f64>,
    row_of: HashMap<String, usize>,
    input_norms: NormStats,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    embedding: Vec<f64>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    metadata: Option<BTreeMap<String, String>>,
}

struct IndexBuilder {
    dimension: Option<usize>,
    rows: Vec<RowMeta>,
    matrix: Vec<f64>,
    row_of: HashMap<String, usize>,
    norms: (f64, f64, f64),
}

impl IndexBuilder {
    fn new() -> Self {
        Self {
            dimension: None,
            rows: Vec::new(),
            matrix: Vec::new(),
            row_of: HashMap::new(),
            norms: (f64::INFINITY, 0.0, 0.0),
        }
    }

    fn push(&mut self, line: usize, record: MemoryRecord) -> Result<()> {
        let found = record.embedding.len();
        if found == 0 {
            return Err(Error::Malformed {
                line,
                message: "embedding is empty".into(),
            });
        }
        let expected = *self.dimension.get_or_insert(found);
        if found != expected {
            return Err(Error::LineDimensionMismatch {
                line,
                expected,
                found,
            });
        }
        if self.row_of.contains_key(&record.id) {
            return Err(Error::DuplicateId {
                line,
                id: record.id,
            });
        }
        let unit = normalized(&record.embedding).ok_or_else(|| Error::ZeroNorm {
            line,
            id: record.id.clone(),
        })?;
        let n = crate::vector::norm(&record.embedding);
        self.norms = (self.norms.0.min(n), self.norms.1.max(n), self.norms.2 + n);
        self.row_of.insert(record.id.clone(), self.rows.len());
        self.matrix.extend_from_slice(&unit);
        self.rows.push(RowMeta {
            id: record.id,
            text: record.text,
            metadata: record.metadata,
        });
        Ok(())
    }

    fn finish(self) -> Result<CorpusIndex> {
        match self.dimension {
            Some(dimension) if !self.rows.is_empty() => Ok(CorpusIndex {
                dimension,
                input_norms: NormStats {
                    min: self.norms.0,
                    max: self.norms.1,
                    mean: self.norms.2 / self.rows.len() as f64,
                },
                rows: self.rows,
                matrix: self.matrix,
                row_of: self.row_of,
            }),
            _ => Err(Error::EmptyCorpus),
        }
    }
}

impl CorpusIndex {
    /// Reads a JSON Lines corpus file. Blank lines are skipped; line numbers in
    /// errors are 1-based physical lines.
    pub fn ingest(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut builder = IndexBuilder::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            builder.push(
                line_no,
                MemoryRecord {
                    id: raw.id,
                    text: raw.text,
                    embedding: raw.embedding,
                    metadata: raw.metadata.unwrap_or_default(),
                },
            )?;
        }
        builder.finish()
    }

    /// Builds an index from in-memory records; "line" numbers in errors are
    /// 1-based positions.
    pub fn from_records(records: impl IntoIterator<Item = MemoryRecord>) -> Result<Self> {
        let mut builder = IndexBuilder::new();
        for (i, record) in records.into_iter().enumerate() {
            builder.push(i + 1, record)?;
        }
        builder.finish()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Always false for a built index; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn input_norms(&self) -> NormStats {
        self.input_norms
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn id(&self, row: usize) -> &str {
        &self.rows[row].id
    }

    pub fn embedding(&self, row: usize) -> &[f64] {
        let start = row * self.dimension;
        &self.matrix[start..start + self.dimension]
    }

    pub fn metadata(&self, row: usize) -> &BTreeMap<String, String> {
        &self.rows[row].metadata
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.row_of.get(id).copied()
    }

    pub fn lookup(&self, id: &str) -> Result<MemoryRecord> {
        let row = self
            .row_of(id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))?;
        Ok(self.record(row))
    }

    pub fn record(&self, row: usize) -> MemoryRecord {
        let meta = &self.rows[row];
        MemoryRecord {
            id: meta.id.clone(),
            text: meta.text.clone(),
            embedding: self.embedding(row).to_vec(),
            metadata: meta.metadata.clone(),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = MemoryRecord> + '_ {
        (0..self.len()).map(|row| self.record(row))
    }

    pub fn check_dimension(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: query.len(),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn score(&self, query: &[f64], row: usize) -> f64 {
        dot(query, self.embedding(row))
    }

    /// Exact top-`k` rows by inner product, skipping `exclude`d rows.
    ///
    /// Every non-excluded row is scored once; `evaluated` reports that count.
    pub fn top_k_rows(
        &self,
        query: &[f64],
        k: usize,
        exclude: Option<&HashSet<usize>>,
    ) -> Result<RowSearch> {
        self.check_dimension(query)?;
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        let mut hits: Vec<Hit> = self
            .matrix
            .chunks_exact(self.dimension)
            .enumerate()
            .filter(|(row, _)| exclude.is_none_or(|ex| !ex.contains(row)))
            .map(|(row, z)| Hit {
                row,
                score: dot(query, z),
            })
            .collect();
        let evaluated = hits.len();
        let cmp = |a: &Hit, b: &Hit| rank_order(a.score, self.id(a.row), b.score, self.id(b.row));
        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, cmp);
            hits.truncate(k);
        }
        hits.sort_unstable_by(cmp);
        Ok(RowSearch { hits, evaluated })
    }

    /// Exact top-`k` by inner product, excluding the given ids.
    pub fn top_k(&self, query: &[f64], k: usize, exclude: &HashSet<String>) -> Result<ScoredList> {
        let rows: HashSet<usize> = exclude.iter().filter_map(|id| self.row_of(id)).collect();
        let search = self.top_k_rows(query, k, (!rows.is_empty()).then_some(&rows))?;
        Ok(self.to_scored_list(&search.hits))
    }

    pub fn to_scored_list(&self, hits: &[Hit]) -> ScoredList {
        // Hits from top_k_rows are already ranked.
        ScoredList(
            hits.iter()
                .map(|h| ScoredId {
                    id: self.id(h.row).to_string(),
                    score: h.score,
                })
                .collect(),
        )
    }
}
