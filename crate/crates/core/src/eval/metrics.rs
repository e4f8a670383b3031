//! Recall@K and batch evaluation.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::ScoredList;
use crate::error::Result;
use crate::eval::data::{GoldSet, QueryRecord};
use crate::gate::Strategy;
use crate::retriever::{RetrievalResult, Retriever};

/// `|top-k ∩ gold| / |gold|`; an empty gold set counts as fully recalled.
pub fn recall_at_k(ranked: &ScoredList, gold: &[String], k: usize) -> f64 {
    if gold.is_empty() {
        return 1.0;
    }
    let gold: HashSet<&str> = gold.iter().map(String::as_str).collect();
    let hits = ranked.ids().take(k).filter(|id| gold.contains(id)).count();
    hits as f64 / gold.len() as f64
}

/// Mean recall per cutoff, keyed `recall@<k>`.
pub type RecallTable = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub path: String,
    pub queries: usize,
    pub evaluated: usize,
    pub errors: usize,
    pub familiarity: usize,
    pub recollection: usize,
    pub overall: RecallTable,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub categories: BTreeMap<String, RecallTable>,
    pub mean_wall_us: f64,
    pub mean_sim_evals: f64,
}

pub fn recall_key(k: usize) -> String {
    format!("recall@{k}")
}

#[derive(Default)]
struct Acc {
    n: usize,
    sums: BTreeMap<usize, f64>,
}

impl Acc {
    fn add(&mut self, result: &RetrievalResult, gold: &[String], cutoffs: &[usize]) {
        self.n += 1;
        for &k in cutoffs {
            *self.sums.entry(k).or_default() += recall_at_k(&result.ranked, gold, k);
        }
    }

    fn table(&self) -> RecallTable {
        self.sums
            .iter()
            .map(|(k, s)| {
                (
                    recall_key(*k),
                    if self.n == 0 { 0.0 } else { s / self.n as f64 },
                )
            })
            .collect()
    }
}

/// Aggregates already-computed results. Queries absent from `gold` are skipped.
pub fn summarize(
    path: &str,
    queries: &[QueryRecord],
    results: &[Result<RetrievalResult>],
    gold: &GoldSet,
    cutoffs: &[usize],
) -> EvalReport {
    let mut overall = Acc::default();
    let mut categories: BTreeMap<String, Acc> = BTreeMap::new();
    let (mut errors, mut fam, mut rec) = (0, 0, 0);
    let (mut wall, mut sims) = (0.0, 0.0);
    for (q, res) in queries.iter().zip(results) {
        let Ok(res) = res else {
            errors += 1;
            continue;
        };
        match res.path {
            Strategy::Familiarity => fam += 1,
            Strategy::Recollection => rec += 1,
        }
        wall += res.wall_time_us as f64;
        sims += res.counters.sim_evals as f64;
        let Some(g) = gold.get(&q.query_id) else {
            continue;
        };
        overall.add(res, g, cutoffs);
        if let Some(cat) = q.category() {
            categories
                .entry(cat.to_string())
                .or_default()
                .add(res, g, cutoffs);
        }
    }
    let ok = fam + rec;
    let denom = ok.max(1) as f64;
    EvalReport {
        path: path.to_string(),
        queries: queries.len(),
        evaluated: overall.n,
        errors,
        familiarity: fam,
        recollection: rec,
        overall: overall.table(),
        categories: categories
            .into_iter()
            .map(|(c, a)| (c, a.table()))
            .collect(),
        mean_wall_us: wall / denom,
        mean_sim_evals: sims / denom,
    }
}

/// Runs `retriever` over `queries` and scores the results.
pub fn evaluate(
    retriever: &Retriever<'_>,
    queries: &[QueryRecord],
    gold: &GoldSet,
    cutoffs: &[usize],
) -> (EvalReport, Vec<Result<RetrievalResult>>) {
    let batch: Vec<_> = queries.iter().map(QueryRecord::to_query).collect();
    let results = retriever.retrieve_batch(&batch);
    let report = summarize(
        &retriever.path.to_string(),
        queries,
        &results,
        gold,
        cutoffs,
    );
    (report, results)
}

/// One CSV row per report: path, counts, recall columns, cost and (optionally) timing.
pub fn reports_to_csv(reports: &[EvalReport], cutoffs: &[usize], timing: bool) -> String {
    let mut out = String::from("path,queries,evaluated,errors,familiarity,recollection");
    for k in cutoffs {
        out.push_str(&format!(",{}", recall_key(*k)));
    }
    out.push_str(if timing {
        ",mean_sim_evals,mean_wall_us\n"
    } else {
        ",mean_sim_evals\n"
    });
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            r.path, r.queries, r.evaluated, r.errors, r.familiarity, r.recollection
        ));
        for k in cutoffs {
            out.push_str(&format!(
                ",{:.6}",
                r.overall.get(&recall_key(*k)).copied().unwrap_or(0.0)
            ));
        }
        out.push_str(&format!(",{:.1}", r.mean_sim_evals));
        if timing {
            out.push_str(&format!(",{:.1}", r.mean_wall_us));
        }
        out.push('\n');
    }
    out
}
