//! Probe, gate, and dispatch to the familiarity or recollection path.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, ScoredList};
use crate::error::{Error, Result};
use crate::gate::{gate, GateParams, GateSignal, Strategy};
use crate::recollect::{recollect, Counters, RecollectParams, RecollectionTrace};

/// Overrides the gate's choice. The probe and gate signal are computed either way.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathChoice {
    #[default]
    Gated,
    Familiarity,
    Recollection,
}

impl std::str::FromStr for PathChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gated" => Ok(PathChoice::Gated),
            "familiarity" => Ok(PathChoice::Familiarity),
            "recollection" => Ok(PathChoice::Recollection),
            other => Err(Error::InvalidParams(format!(
                "unknown path `{other}` (expected gated, familiarity or recollection)"
            ))),
        }
    }
}

impl std::fmt::Display for PathChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PathChoice::Gated => "gated",
            PathChoice::Familiarity => "familiarity",
            PathChoice::Recollection => "recollection",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query_id: String,
    pub path: Strategy,
    pub ranked: ScoredList,
    pub gate: GateSignal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<RecollectionTrace>,
    pub counters: Counters,
    pub wall_time_us: u64,
}

/// Controls what [`RetrievalResult::to_json`] emits.
#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    /// Include the recollection trace and the gate's softmax distribution.
    pub trace: bool,
    /// Include mixed-query vectors inside the trace.
    pub trace_vectors: bool,
    /// Omit `wall_time_us`, making output byte-reproducible.
    pub omit_timing: bool,
}

impl RetrievalResult {
    pub fn to_json(&self, opts: OutputOptions) -> serde_json::Value {
        let mut gate = self.gate.summary();
        let mut trace = None;
        if opts.trace {
            gate.distribution = self.gate.distribution.clone();
            trace = self.trace.as_ref().map(|t| {
                if opts.trace_vectors {
                    t.clone()
                } else {
                    t.without_vectors()
                }
            });
        }
        let mut value = serde_json::json!({
            "query_id": self.query_id,
            "path": self.path,
            "ranked": self.ranked,
            "gate": gate,
            "counters": self.counters,
        });
        let obj = value.as_object_mut().expect("object literal");
        if !opts.omit_timing {
            obj.insert("wall_time_us".into(), self.wall_time_us.into());
        }
        if let Some(t) = trace {
            obj.insert(
                "trace".into(),
                serde_json::to_value(t).expect("trace serializes"),
            );
        }
        value
    }
}

/// A query vector with its identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub embedding: Vec<f64>,
}

/// Dual-path retriever over a shared index.
///
/// Similarity-evaluation cost per query, with `M` the corpus size:
/// - familiarity: `M` when `probe_k >= final_k` (the probe prefix is reused),
///   otherwise `2M`;
/// - recollection: `M` for the probe plus, for every round `r` and each of its
///   `a_r` active beams, `M + min((B + r)·F, M)`.
#[derive(Debug, Clone, Copy)]
pub struct Retriever<'a> {
    pub index: &'a CorpusIndex,
    pub gate: GateParams,
    pub recollect: RecollectParams,
    pub path: PathChoice,
}

impl<'a> Retriever<'a> {
    pub fn new(index: &'a CorpusIndex, gate: GateParams, recollect: RecollectParams) -> Self {
        Self {
            index,
            gate,
            recollect,
            path: PathChoice::Gated,
        }
    }

    pub fn with_path(mut self, path: PathChoice) -> Self {
        self.path = path;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.gate.validate()?;
        self.recollect.validate()
    }

    pub fn retrieve(&self, query_id: &str, query: &[f64]) -> Result<RetrievalResult> {
        let start = Instant::now();
        self.index.check_dimension(query)?;
        self.validate()?;
        let m = self.index.len() as u64;
        let final_k = self.recollect.final_k;
        let mut counters = Counters::default();

        let probe = self.index.top_k_rows(query, self.gate.probe_k, None)?;
        counters.sim_evals += probe.evaluated as u64;
        let probe = self.index.to_scored_list(&probe.hits);
        let signal = gate(&probe, &self.gate)?;

        let path = match self.path {
            PathChoice::Gated => signal.strategy,
            PathChoice::Familiarity => Strategy::Familiarity,
            PathChoice::Recollection => Strategy::Recollection,
        };

        let (ranked, trace) = match path {
            Strategy::Familiarity if self.gate.probe_k >= final_k => (probe.prefix(final_k), None),
            Strategy::Familiarity => {
                let search = self.index.top_k_rows(query, final_k, None)?;
                counters.sim_evals += search.evaluated as u64;
                debug_assert_eq!(search.evaluated as u64, m);
                (self.index.to_scored_list(&search.hits), None)
            }
            Strategy::Recollection => {
                let out = recollect(self.index, query, &self.recollect)?;
                counters += out.counters;
                (out.ranked, Some(out.trace))
            }
        };

        Ok(RetrievalResult {
            query_id: query_id.to_string(),
            path,
            ranked,
            gate: signal,
            trace,
            counters,
            wall_time_us: start.elapsed().as_micros() as u64,
        })
    }

    /// Runs every query; output order matches input order. Each entry carries
    /// its own error so one bad query does not abort the batch.
    pub fn retrieve_batch(&self, queries: &[Query]) -> Vec<Result<RetrievalResult>> {
        let run = |q: &Query| self.retrieve(&q.id, &q.embedding);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            queries.par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            queries.iter().map(run).collect()
        }
    }

    /// Analytic similarity-evaluation count for `result`, recomputed from the
    /// parameters and (for recollection) the per-round active beam counts.
    pub fn expected_sim_evals(&self, result: &RetrievalResult) -> Option<u64> {
        expected_sim_evals(self.index.len(), &self.gate, &self.recollect, result)
    }
}

/// See [`Retriever`] for the cost model. `None` when a recollection result has no trace.
pub fn expected_sim_evals(
    corpus_size: usize,
    gate: &GateParams,
    recollect: &RecollectParams,
    result: &RetrievalResult,
) -> Option<u64> {
    let m = corpus_size as u64;
    match result.path {
        Strategy::Familiarity if gate.probe_k >= recollect.final_k => Some(m),
        Strategy::Familiarity => Some(2 * m),
        Strategy::Recollection => {
            let trace = result.trace.as_ref()?;
            let rounds: u64 = trace
                .active_beams()
                .iter()
                .enumerate()
                .map(|(r, &beams)| {
                    let budget = crate::recollect::round_budget(recollect, r) as u64;
                    beams as u64 * (m + budget.min(m))
                })
                .sum();
            Some(m + rounds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MemoryRecord;
    use crate::gate::{entropy, tempered_softmax};
    use crate::vector::normalized;

    fn unit(v: &[f64]) -> Vec<f64> {
        normalized(v).unwrap()
    }

    #[test]
    fn duplicates_of_query_go_familiar() {
        let q = unit(&[1.0, 2.0, 3.0, 4.0]);
        let mut records: Vec<MemoryRecord> = (0..10)
            .map(|i| MemoryRecord::new(format!("dup{i}"), q.clone()))
            .collect();
        records.extend((0..20).map(|i| {
            let t = i as f64;
            MemoryRecord::new(format!("x{i}"), vec![t.sin(), t.cos(), -1.0, 0.5])
        }));
        let idx = CorpusIndex::from_records(records).unwrap();
        let r = Retriever::new(&idx, GateParams::default(), RecollectParams::default());
        let out = r.retrieve("q", &q).unwrap();
        assert_eq!(out.path, Strategy::Familiarity);
        assert!((out.ranked.entries()[0].score - 1.0).abs() < 1e-9);
        assert!(out.trace.is_none());
        assert_eq!(out.counters.rounds, 0);
        assert_eq!(out.counters.sim_evals, idx.len() as u64);
    }

    #[test]
    fn orthogonal_corpus_goes_recollection() {
        let q = vec![1.0, 0.0, 0.0, 0.0];
        let records = (0..30).map(|i| {
            let t = i as f64 * 0.3;
            MemoryRecord::new(format!("o{i}"), vec![0.01 * t.sin(), t.cos(), t.sin(), 0.3])
        });
        let idx = CorpusIndex::from_records(records).unwrap();
        let r = Retriever::new(&idx, GateParams::default(), RecollectParams::default());
        let out = r.retrieve("q", &q).unwrap();
        assert_eq!(out.path, Strategy::Recollection);
        assert!(out.gate.mean.unwrap() <= 0.3);
        assert!(out.trace.is_some());
        assert_eq!(r.expected_sim_evals(&out), Some(out.counters.sim_evals));
    }

    #[test]
    fn mid_band_near_uniform_goes_recollection() {
        // Ten records all at cosine 0.45 ± 1e-4 from the query: spread ≪ 1/λ.
        let d = 12;
        let q: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let records = (0..10).map(|i| {
            let s = 0.45 + 1e-4 * (i as f64 - 4.5) / 4.5;
            let mut z = vec![0.0; d];
            z[0] = s;
            z[i + 1] = (1.0 - s * s).sqrt();
            MemoryRecord::new(format!("r{i}"), z)
        });
        let idx = CorpusIndex::from_records(records).unwrap();
        let r = Retriever::new(&idx, GateParams::default(), RecollectParams::default());
        let out = r.retrieve("q", &q).unwrap();
        let mean = out.gate.mean.unwrap();
        assert!((mean - 0.45).abs() < 1e-9);
        // Entropy oracle: recompute from the raw probe scores.
        let h = entropy(&tempered_softmax(&out.gate.scores, 20.0).unwrap()).unwrap();
        assert!((h - 10f64.ln()).abs() < 1e-4);
        assert_eq!(out.path, Strategy::Recollection);
    }

    #[test]
    fn second_scan_when_probe_is_short() {
        let idx = CorpusIndex::from_records((0..25).map(|i| {
            let t = i as f64 * 0.2;
            MemoryRecord::new(format!("{i:02}"), vec![t.cos(), t.sin()])
        }))
        .unwrap();
        let gate = GateParams {
            probe_k: 3,
            ..GateParams::default()
        };
        let r = Retriever::new(&idx, gate, RecollectParams::default())
            .with_path(PathChoice::Familiarity);
        let out = r.retrieve("q", &[1.0, 0.0]).unwrap();
        assert_eq!(out.ranked.len(), 10);
        assert_eq!(out.counters.sim_evals, 50);
        assert_eq!(r.expected_sim_evals(&out), Some(50));
        assert_eq!(out.gate.scores.len(), 3);
    }

    #[test]
    fn batch_matches_sequential_and_isolates_errors() {
        let idx = CorpusIndex::from_records((0..40).map(|i| {
            let t = i as f64 * 0.15;
            MemoryRecord::new(format!("{i:02}"), vec![t.cos(), t.sin(), (2.0 * t).sin()])
        }))
        .unwrap();
        let r = Retriever::new(&idx, GateParams::default(), RecollectParams::default());
        let queries = vec![
            Query {
                id: "a".into(),
                embedding: unit(&[1.0, 0.0, 0.2]),
            },
            Query {
                id: "bad".into(),
                embedding: vec![1.0],
            },
            Query {
                id: "c".into(),
                embedding: unit(&[-0.3, 1.0, 0.0]),
            },
        ];
        let batch = r.retrieve_batch(&queries);
        assert!(batch[1].is_err());
        for (q, res) in queries.iter().zip(&batch) {
            if let Ok(res) = res {
                let seq = r.retrieve(&q.id, &q.embedding).unwrap();
                assert_eq!(res.ranked, seq.ranked);
                assert_eq!(res.trace, seq.trace);
                assert_eq!(res.counters, seq.counters);
            }
        }
    }

    #[test]
    fn json_shape() {
        let idx = CorpusIndex::from_records((0..12).map(|i| {
            let t = i as f64 * 0.5;
            MemoryRecord::new(format!("{i:02}"), vec![t.cos(), t.sin()])
        }))
        .unwrap();
        let r = Retriever::new(&idx, GateParams::default(), RecollectParams::default())
            .with_path(PathChoice::Recollection);
        let out = r.retrieve("q1", &[0.0, 1.0]).unwrap();
        let plain = out.to_json(OutputOptions::default());
        for key in [
            "query_id",
            "path",
            "ranked",
            "gate",
            "counters",
            "wall_time_us",
        ] {
            assert!(plain.get(key).is_some(), "{key}");
        }
        assert!(plain.get("trace").is_none());
        assert!(plain["gate"].get("distribution").is_none());
        assert_eq!(plain["path"], "recollection");
        assert!(plain["ranked"][0]["id"].is_string());

        let traced = out.to_json(OutputOptions {
            trace: true,
            omit_timing: true,
            ..Default::default()
        });
        assert!(traced.get("wall_time_us").is_none());
        assert!(traced["trace"]["rounds"].is_array());
        assert!(traced["gate"]["distribution"].is_array());
        assert!(traced["trace"]["rounds"][0]["beams"][0]["clusters"][0]
            .get("mixed_query")
            .is_none());
    }

    #[test]
    fn path_choice_parses() {
        assert_eq!("gated".parse::<PathChoice>().unwrap(), PathChoice::Gated);
        assert_eq!(
            "recollection".parse::<PathChoice>().unwrap(),
            PathChoice::Recollection
        );
        assert!("other".parse::<PathChoice>().is_err());
    }
}
