//! Browser demo: an interactive gate explorer and a 2-D recollection playground.
//!
//! Every exported function takes plain numbers or strings and returns a JSON
//! string, so the page needs no bindings beyond `JSON.parse`. The same logic is
//! available natively through the `*_report` functions.

use std::f64::consts::TAU;

use dualmem_core::gate::{entropy, exp_certificate, gate_scores, phi_k, tempered_softmax};
use dualmem_core::recollect::cluster_seed;
use dualmem_core::{CorpusIndex, GateParams, MemoryRecord, RecollectParams, Result, Strategy};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_json<T: Serialize>(r: Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("report serializes"),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

/// Parses a comma- or whitespace-separated list of numbers.
pub fn parse_scores(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| dualmem_core::Error::InvalidParams(format!("`{s}`: {e}")))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub entropy: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    pub scores: Vec<f64>,
    pub distribution: Vec<f64>,
    pub mean: f64,
    pub entropy: f64,
    pub max_entropy: f64,
    pub p_max: f64,
    pub strategy: Strategy,
    /// Which rule fired: "high", "low", "entropy-low" or "entropy-high".
    pub reason: &'static str,
    /// Lower bound on `p_max` whenever entropy is at most `tau`.
    pub certificate: f64,
    /// Where the largest entropy compatible with a given `p_max` drops to `tau`.
    pub envelope_root: Option<f64>,
    /// Entropy and top probability of the same scores as λ sweeps 0..=100.
    pub curve: Vec<CurvePoint>,
}

pub fn gate_report(
    scores: &str,
    lambda: f64,
    theta_high: f64,
    theta_low: f64,
    tau: f64,
) -> Result<GateReport> {
    let scores = parse_scores(scores)?;
    let params = GateParams {
        lambda,
        theta_high,
        theta_low,
        tau,
        probe_k: scores.len().max(1),
    };
    params.validate()?;
    if scores.is_empty() {
        return Err(dualmem_core::Error::EmptyScores);
    }
    let signal = gate_scores(&scores, &params)?;
    let (mean, h) = (
        signal.mean.unwrap_or_default(),
        signal.entropy.unwrap_or_default(),
    );
    let reason = if mean >= theta_high {
        "high"
    } else if mean <= theta_low {
        "low"
    } else if h <= tau {
        "entropy-low"
    } else {
        "entropy-high"
    };
    let curve = (0..=100)
        .map(|i| {
            let l = i as f64;
            let p = tempered_softmax(&scores, l)?;
            Ok(CurvePoint {
                lambda: l,
                entropy: entropy(&p)?,
                p_max: p.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = scores.len();
    Ok(GateReport {
        p_max: signal.distribution.iter().copied().fold(0.0, f64::max),
        distribution: signal.distribution,
        scores,
        mean,
        entropy: h,
        max_entropy: (k as f64).ln(),
        strategy: signal.strategy,
        reason,
        certificate: exp_certificate(tau),
        envelope_root: (k >= 2).then(|| phi_k(tau, k)),
        curve,
    })
}

/// Gate explorer: softmax, entropy, decision and certificates for a score list.
#[wasm_bindgen]
pub fn explore_gate(
    scores: &str,
    lambda: f64,
    theta_high: f64,
    theta_low: f64,
    tau: f64,
) -> String {
    to_json(gate_report(scores, lambda, theta_high, theta_low, tau))
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanePoint {
    pub id: String,
    pub angle: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ray {
    pub round: usize,
    pub angle: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaygroundReport {
    pub points: Vec<PlanePoint>,
    pub query_angle: f64,
    pub familiarity: Vec<String>,
    pub recollection: Vec<String>,
    /// Mixed queries per round; `kept` marks the ones that became the next beam.
    pub rays: Vec<Ray>,
    pub bagged_per_round: Vec<Vec<String>>,
    pub sim_evals: u64,
}

/// Uniform in `[0, 1)` from a 64-bit hash.
fn unit_hash(seed: u64, a: usize, b: usize) -> f64 {
    (cluster_seed(seed, a, b) >> 11) as f64 / (1u64 << 53) as f64
}

/// Points on the unit circle in `clusters` arcs of the given angular width.
pub fn circle_corpus(points: usize, clusters: usize, width: f64, seed: u64) -> Vec<PlanePoint> {
    let clusters = clusters.max(1);
    let centers: Vec<f64> = (0..clusters)
        .map(|c| TAU * unit_hash(seed, c, usize::MAX))
        .collect();
    (0..points)
        .map(|i| {
            let c = i % clusters;
            let angle = (centers[c] + width * (unit_hash(seed, i, c) - 0.5)).rem_euclid(TAU);
            PlanePoint {
                id: format!("m{i:03}"),
                angle,
                cluster: c,
            }
        })
        .collect()
}

fn angle_of(v: &[f64]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(TAU)
}

#[allow(clippy::too_many_arguments)]
pub fn playground_report(
    points: usize,
    clusters: usize,
    width: f64,
    seed: u64,
    query_angle: f64,
    beam: usize,
    fanout: usize,
    rounds: usize,
    alpha: f64,
    k: usize,
) -> Result<PlaygroundReport> {
    let pts = circle_corpus(points, clusters, width, seed);
    let index = CorpusIndex::from_records(
        pts.iter()
            .map(|p| MemoryRecord::new(p.id.clone(), vec![p.angle.cos(), p.angle.sin()])),
    )?;
    let query = [query_angle.cos(), query_angle.sin()];
    let params = RecollectParams {
        beam_b: beam,
        fanout_f: fanout,
        max_rounds_r: rounds,
        alpha,
        final_k: k,
        seed,
    };
    let familiarity = index.top_k(&query, k, &Default::default())?;
    let out = dualmem_core::recollect(&index, &query, &params)?;
    let mut rays = Vec::new();
    for round in &out.trace.rounds {
        for (b, beam) in round.beams.iter().enumerate() {
            for (c, cluster) in beam.clusters.iter().enumerate() {
                if let Some(q) = &cluster.mixed_query {
                    rays.push(Ray {
                        round: round.round,
                        angle: angle_of(q),
                        kept: round.kept.contains(&(b, c)),
                    });
                }
            }
        }
    }
    Ok(PlaygroundReport {
        points: pts,
        query_angle: query_angle.rem_euclid(TAU),
        familiarity: familiarity.ids().map(str::to_string).collect(),
        recollection: out.ranked.ids().map(str::to_string).collect(),
        bagged_per_round: out
            .trace
            .rounds
            .iter()
            .map(|r| r.bagged.iter().map(|s| s.id.clone()).collect())
            .collect(),
        rays,
        sim_evals: out.counters.sim_evals,
    })
}

/// Recollection playground: familiarity top-K against the recollection loop
/// on a clustered corpus laid out on the unit circle.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn explore_recollection(
    points: usize,
    clusters: usize,
    width: f64,
    seed: u32,
    query_angle: f64,
    beam: usize,
    fanout: usize,
    rounds: usize,
    alpha: f64,
    k: usize,
) -> String {
    to_json(playground_report(
        points,
        clusters,
        width,
        seed as u64,
        query_angle,
        beam,
        fanout,
        rounds,
        alpha,
        k,
    ))
}
