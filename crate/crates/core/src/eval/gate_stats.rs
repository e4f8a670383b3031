//! Per-query familiarity signals and their quartiles.

use serde::{Deserialize, Serialize};

use crate::gate::Strategy;
use crate::retriever::RetrievalResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRow {
    pub query_id: String,
    pub mean: Option<f64>,
    pub entropy: Option<f64>,
    pub strategy: Strategy,
}

/// Min, first quartile, median, third quartile, max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateStats {
    pub rows: Vec<GateRow>,
    pub mean: Option<Quartiles>,
    pub entropy: Option<Quartiles>,
    pub familiarity: usize,
    pub recollection: usize,
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn quartiles(values: impl IntoIterator<Item = f64>) -> Option<Quartiles> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

pub fn gate_stats(results: &[RetrievalResult]) -> GateStats {
    let rows: Vec<GateRow> = results
        .iter()
        .map(|r| GateRow {
            query_id: r.query_id.clone(),
            mean: r.gate.mean,
            entropy: r.gate.entropy,
            strategy: r.gate.strategy,
        })
        .collect();
    GateStats {
        mean: quartiles(rows.iter().filter_map(|r| r.mean)),
        entropy: quartiles(rows.iter().filter_map(|r| r.entropy)),
        familiarity: rows
            .iter()
            .filter(|r| r.strategy == Strategy::Familiarity)
            .count(),
        recollection: rows
            .iter()
            .filter(|r| r.strategy == Strategy::Recollection)
            .count(),
        rows,
    }
}

impl GateStats {
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
        let mut out = String::from("query_id,mean,entropy,strategy\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.query_id,
                fmt(r.mean),
                fmt(r.entropy),
                r.strategy
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_of_small_sets() {
        let q = quartiles([4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!(
            (q.min, q.q1, q.median, q.q3, q.max),
            (1.0, 2.0, 3.0, 4.0, 5.0)
        );
        let q = quartiles([1.0, 2.0]).unwrap();
        assert_eq!(q.median, 1.5);
        assert_eq!(q.q1, 1.25);
        assert!(quartiles(std::iter::empty()).is_none());
    }
}
