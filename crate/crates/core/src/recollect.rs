//! Iterative retrieve → cluster → mix recollection.
//!
//! Round `r` runs every beam query against the index for the top
//! `(B + r) × F` candidates, clusters each candidate set into at most `B`
//! groups, and blends each unit centroid into a new query
//! `norm(α·current + (1 − α)·centroid + original)`. All `(mixed query, cluster)`
//! pairs of the round are scored together by the summed similarity of the
//! mixed query to the cluster members; the best `B` pairs become the next beam
//! and their unseen members enter the evidence bag with their mixed-query
//! similarity. The loop ends after `R` rounds or once the bag holds `K` ids.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, ScoredId, ScoredList};
use crate::error::{Error, Result};
use crate::kmeans;
use crate::vector::{dot, normalized};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecollectParams {
    /// Beam width B.
    pub beam_b: usize,
    /// Fanout F.
    pub fanout_f: usize,
    /// Round limit R.
    pub max_rounds_r: usize,
    /// Weight of the current query in the mix; the centroid gets `1 - alpha`.
    pub alpha: f64,
    /// Final budget K.
    pub final_k: usize,
    pub seed: u64,
}

impl Default for RecollectParams {
    fn default() -> Self {
        Self {
            beam_b: 3,
            fanout_f: 2,
            max_rounds_r: 3,
            alpha: 0.5,
            final_k: 10,
            seed: 0,
        }
    }
}

impl RecollectParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beam", self.beam_b),
            ("fanout", self.fanout_f),
            ("rounds", self.max_rounds_r),
            ("k", self.final_k),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParams(format!("{name} must be at least 1")));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Rounds whose candidate budget exceeds the final budget K.
    ///
    /// The loop stays well-defined; callers typically log this.
    pub fn budget_overruns(&self) -> Vec<usize> {
        (0..self.max_rounds_r)
            .filter(|&r| round_budget(self, r) > self.final_k)
            .collect()
    }
}

/// Candidates retrieved per beam in round `r`: `(B + r) × F`.
pub fn round_budget(params: &RecollectParams, r: usize) -> usize {
    (params.beam_b + r) * params.fanout_f
}

/// `norm(α·current + (1 − α)·centroid + original)`.
///
/// Returns the original query and `true` when the blend cancels to (nearly) zero.
pub fn alpha_mix(
    current: &[f64],
    centroid: &[f64],
    original: &[f64],
    alpha: f64,
) -> (Vec<f64>, bool) {
    let blend: Vec<f64> = current
        .iter()
        .zip(centroid)
        .zip(original)
        .map(|((x, g), o)| alpha * x + (1.0 - alpha) * g + o)
        .collect();
    if crate::vector::norm(&blend) < 1e-12 {
        return (original.to_vec(), true);
    }
    match normalized(&blend) {
        Some(v) => (v, false),
        None => (original.to_vec(), true),
    }
}

/// Sum of inner products between the mixed query and each member.
pub fn beam_score<M: AsRef<[f64]>>(mixed_query: &[f64], members: &[M]) -> f64 {
    members.iter().map(|z| dot(mixed_query, z.as_ref())).sum()
}

/// Operation counts for one retrieval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Query-vs-memory inner products: index scans plus beam scoring.
    pub sim_evals: u64,
    pub cluster_calls: u64,
    pub rounds: u64,
}

impl std::ops::AddAssign for Counters {
    fn add_assign(&mut self, rhs: Self) {
        self.sim_evals += rhs.sim_evals;
        self.cluster_calls += rhs.cluster_calls;
        self.rounds += rhs.rounds;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTrace {
    /// Member ids in candidate-rank order.
    pub members: Vec<String>,
    /// The blended query built from this cluster's centroid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed_query: Option<Vec<f64>>,
    pub score: f64,
    /// The blend cancelled and the original query was substituted.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamTrace {
    pub candidates: ScoredList,
    pub clusters: Vec<ClusterTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    /// Per-beam candidate budget for this round.
    pub budget: usize,
    pub beams: Vec<BeamTrace>,
    /// `(beam, cluster)` pairs kept as the next beam, best first.
    pub kept: Vec<(usize, usize)>,
    /// Ids that entered the bag this round, in insertion order.
    pub bagged: Vec<ScoredId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecollectionTrace {
    pub rounds: Vec<RoundTrace>,
}

impl RecollectionTrace {
    /// Removes the stored mixed-query vectors.
    pub fn without_vectors(&self) -> Self {
        let mut t = self.clone();
        for round in &mut t.rounds {
            for beam in &mut round.beams {
                for c in &mut beam.clusters {
                    c.mixed_query = None;
                }
            }
        }
        t
    }

    /// Number of beams that ran in each round.
    pub fn active_beams(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.beams.len()).collect()
    }
}

/// Ids with their insertion-time score, deduplicated.
#[derive(Debug, Clone, Default)]
pub struct EvidenceBag {
    entries: Vec<ScoredId>,
    seen: HashSet<usize>,
}

impl EvidenceBag {
    /// Inserts `row` unless it has been seen; returns whether it was new.
    fn insert(&mut self, row: usize, id: &str, score: f64) -> bool {
        if !self.seen.insert(row) {
            return false;
        }
        self.entries.push(ScoredId {
            id: id.to_string(),
            score,
        });
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ScoredId] {
        &self.entries
    }

    fn ranked(self, k: usize) -> ScoredList {
        ScoredList::from_unsorted(self.entries).prefix(k)
    }
}

#[derive(Debug, Clone)]
pub struct Recollection {
    pub ranked: ScoredList,
    pub trace: RecollectionTrace,
    pub counters: Counters,
}

/// Per-(round, beam) clustering seed, splitmix64-mixed from the call seed.
pub fn cluster_seed(seed: u64, round: usize, beam: usize) -> u64 {
    let mut z = seed
        ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (beam as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Candidate {
    query: Vec<f64>,
    beam: usize,
    cluster: usize,
    /// `(row, similarity to query)` in candidate-rank order.
    members: Vec<(usize, f64)>,
    score: f64,
}

/// Runs the recollection loop for a unit `query`.
pub fn recollect(
    index: &CorpusIndex,
    query: &[f64],
    params: &RecollectParams,
) -> Result<Recollection> {
    index.check_dimension(query)?;
    params.validate()?;
    if index.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let original = query.to_vec();
    let mut beam: Vec<Vec<f64>> = vec![original.clone()];
    let mut bag = EvidenceBag::default();
    let mut trace = RecollectionTrace::default();
    let mut counters = Counters::default();

    for r in 0..params.max_rounds_r {
        let budget = round_budget(params, r);
        let mut next: Vec<Candidate> = Vec::new();
        let mut beam_traces = Vec::with_capacity(beam.len());

        for (b, current) in beam.iter().enumerate() {
            let search = index.top_k_rows(current, budget, None)?;
            counters.sim_evals += search.evaluated as u64;
            let hits = search.hits;
            let mut clusters = Vec::new();
            if !hits.is_empty() {
                let points: Vec<&[f64]> = hits.iter().map(|h| index.embedding(h.row)).collect();
                let clustering =
                    kmeans::cluster(&points, params.beam_b, cluster_seed(params.seed, r, b));
                counters.cluster_calls += 1;
                for (c, (members, centroid)) in clustering
                    .members
                    .iter()
                    .zip(&clustering.centroids)
                    .enumerate()
                {
                    let (mixed, degenerate) = alpha_mix(current, centroid, &original, params.alpha);
                    let scored: Vec<(usize, f64)> = members
                        .iter()
                        .map(|&m| (hits[m].row, index.score(&mixed, hits[m].row)))
                        .collect();
                    counters.sim_evals += scored.len() as u64;
                    let score: f64 = scored.iter().map(|(_, s)| s).sum();
                    clusters.push(ClusterTrace {
                        members: scored
                            .iter()
                            .map(|(row, _)| index.id(*row).to_string())
                            .collect(),
                        mixed_query: Some(mixed.clone()),
                        score,
                        degenerate,
                    });
                    next.push(Candidate {
                        query: mixed,
                        beam: b,
                        cluster: c,
                        members: scored,
                        score,
                    });
                }
            }
            beam_traces.push(BeamTrace {
                candidates: index.to_scored_list(&hits),
                clusters,
            });
        }
        counters.rounds += 1;

        if next.is_empty() {
            trace.rounds.push(RoundTrace {
                round: r,
                budget,
                beams: beam_traces,
                kept: Vec::new(),
                bagged: Vec::new(),
            });
            break;
        }

        next.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.beam.cmp(&b.beam))
                .then(a.cluster.cmp(&b.cluster))
        });
        next.truncate(params.beam_b);

        let mut bagged = Vec::new();
        for cand in &next {
            for &(row, score) in &cand.members {
                if bag.insert(row, index.id(row), score) {
                    bagged.push(ScoredId {
                        id: index.id(row).to_string(),
                        score,
                    });
                }
            }
        }
        trace.rounds.push(RoundTrace {
            round: r,
            budget,
            beams: beam_traces,
            kept: next.iter().map(|c| (c.beam, c.cluster)).collect(),
            bagged,
        });
        beam = next.into_iter().map(|c| c.query).collect();

        if bag.len() >= params.final_k {
            break;
        }
    }

    Ok(Recollection {
        ranked: bag.ranked(params.final_k),
        trace,
        counters,
    })
}
