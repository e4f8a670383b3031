//! Reference top-K: score everything, sort everything, take a prefix.
//!
//! Deliberately shares no code with the index's search path.

use crate::corpus::{CorpusIndex, ScoredId, ScoredList};

pub fn oracle_top_k(index: &CorpusIndex, query: &[f64], k: usize) -> ScoredList {
    let mut all: Vec<(String, f64)> = Vec::with_capacity(index.len());
    for row in 0..index.len() {
        let z = index.embedding(row);
        let mut s = 0.0;
        for i in 0..z.len() {
            s += query[i] * z[i];
        }
        all.push((index.id(row).to_string(), s));
    }
    all.sort_by(|a, b| match b.1.partial_cmp(&a.1).expect("finite scores") {
        std::cmp::Ordering::Equal => a.0.cmp(&b.0),
        other => other,
    });
    ScoredList::from_unsorted(
        all.into_iter()
            .take(k)
            .map(|(id, score)| ScoredId { id, score })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MemoryRecord;

    #[test]
    fn finds_itself_and_sorts_all() {
        let idx = CorpusIndex::from_records(
            (0..6).map(|i| MemoryRecord::new(format!("r{i}"), vec![1.0, i as f64])),
        )
        .unwrap();
        let q = idx.embedding(4).to_vec();
        assert_eq!(oracle_top_k(&idx, &q, 1).entries()[0].id, "r4");
        let all = oracle_top_k(&idx, &q, 6);
        assert_eq!(all.len(), 6);
        assert!(all.is_ranked());
    }
}
