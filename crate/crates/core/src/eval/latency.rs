//! Per-path latency and operation-count summaries.

use serde::{Deserialize, Serialize};

use crate::gate::{GateParams, Strategy};
use crate::recollect::{round_budget, RecollectParams};
use crate::retriever::{expected_sim_evals, RetrievalResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub count: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub p95_us: f64,
    pub mean_sim_evals: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub total: usize,
    pub familiarity: Option<PathStats>,
    pub recollection: Option<PathStats>,
    /// Queries whose counters disagree with the analytic cost model.
    pub counter_mismatches: Vec<String>,
}

impl LatencyReport {
    pub fn counters_exact(&self) -> bool {
        self.counter_mismatches.is_empty()
    }
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn stats(results: &[&RetrievalResult]) -> Option<PathStats> {
    if results.is_empty() {
        return None;
    }
    let mut t: Vec<f64> = results.iter().map(|r| r.wall_time_us as f64).collect();
    t.sort_by(f64::total_cmp);
    let n = t.len();
    let median = if n % 2 == 1 {
        t[n / 2]
    } else {
        0.5 * (t[n / 2 - 1] + t[n / 2])
    };
    Some(PathStats {
        count: n,
        mean_us: t.iter().sum::<f64>() / n as f64,
        median_us: median,
        p95_us: percentile(&t, 95.0),
        mean_sim_evals: results
            .iter()
            .map(|r| r.counters.sim_evals as f64)
            .sum::<f64>()
            / n as f64,
    })
}

/// Checks one result's counters: total similarity evaluations, per-beam
/// candidate counts, clustering calls and rounds.
pub fn check_counters(
    result: &RetrievalResult,
    corpus_size: usize,
    gate: &GateParams,
    recollect: &RecollectParams,
) -> Result<(), String> {
    let c = &result.counters;
    let expected = expected_sim_evals(corpus_size, gate, recollect, result)
        .ok_or_else(|| "recollection result without trace".to_string())?;
    if c.sim_evals != expected {
        return Err(format!("sim_evals {} != expected {expected}", c.sim_evals));
    }
    match (&result.path, &result.trace) {
        (Strategy::Familiarity, None) => {
            if c.rounds != 0 || c.cluster_calls != 0 {
                return Err("familiarity result reports recollection work".into());
            }
        }
        (Strategy::Familiarity, Some(_)) => return Err("familiarity result carries a trace".into()),
        (Strategy::Recollection, None) => return Err("recollection result without trace".into()),
        (Strategy::Recollection, Some(trace)) => {
            if c.rounds as usize != trace.rounds.len() {
                return Err(format!(
                    "rounds {} != traced {}",
                    c.rounds,
                    trace.rounds.len()
                ));
            }
            let beams: usize = trace.active_beams().iter().sum();
            if c.cluster_calls as usize != beams {
                return Err(format!(
                    "cluster_calls {} != active beams {beams}",
                    c.cluster_calls
                ));
            }
            let mut prev_kept = 1;
            for round in &trace.rounds {
                let want = round_budget(recollect, round.round).min(corpus_size);
                if round.budget != round_budget(recollect, round.round) {
                    return Err(format!("round {} budget {}", round.round, round.budget));
                }
                if round.beams.len() != prev_kept {
                    return Err(format!(
                        "round {} ran {} beams, previous round kept {prev_kept}",
                        round.round,
                        round.beams.len()
                    ));
                }
                if let Some(b) = round.beams.iter().find(|b| b.candidates.len() != want) {
                    return Err(format!(
                        "round {} retrieved {} candidates, expected {want}",
                        round.round,
                        b.candidates.len()
                    ));
                }
                if round.kept.len() > recollect.beam_b {
                    return Err(format!(
                        "round {} kept {} beams",
                        round.round,
                        round.kept.len()
                    ));
                }
                prev_kept = round.kept.len();
            }
        }
    }
    Ok(())
}

pub fn latency_report(
    results: &[RetrievalResult],
    corpus_size: usize,
    gate: &GateParams,
    recollect: &RecollectParams,
) -> LatencyReport {
    let fam: Vec<&RetrievalResult> = results
        .iter()
        .filter(|r| r.path == Strategy::Familiarity)
        .collect();
    let rec: Vec<&RetrievalResult> = results
        .iter()
        .filter(|r| r.path == Strategy::Recollection)
        .collect();
    let counter_mismatches = results
        .iter()
        .filter_map(|r| {
            check_counters(r, corpus_size, gate, recollect)
                .err()
                .map(|e| format!("{}: {e}", r.query_id))
        })
        .collect();
    LatencyReport {
        total: results.len(),
        familiarity: stats(&fam),
        recollection: stats(&rec),
        counter_mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 19.0);
        assert_eq!(percentile(&v, 100.0), 20.0);
        assert_eq!(percentile(&[3.0], 95.0), 3.0);
    }
}
