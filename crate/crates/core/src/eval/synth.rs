//! Synthetic corpora with planted evidence chains.
//!
//! Background memories form `clusters` angular blobs around random unit
//! directions. Each query sits near one cluster center and owns a chain of
//! gold memories laid out along the arc from the query toward a second
//! "bridge" cluster:
//!
//! * near gold stays inside the query's own neighborhood, at half the radius
//!   of its `2 × chain_length` nearest background memories, so plain top-K
//!   search always sees it;
//! * far gold (`⌈dispersion × chain_length⌉` items, labelled with the bridge
//!   cluster) sits just beyond that radius on the same arc, where a one-shot
//!   search ranks it under background noise but a query pulled toward the near
//!   gold's centroid picks it up.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{parse_value, read_kv, Entry};
use crate::corpus::MemoryRecord;
use crate::error::{Error, Result};
use crate::eval::data::{write_jsonl, GoldSet, QueryRecord};
use crate::vector::{dot, normalized};

/// Query offset from its cluster center, as a fraction of `spread`.
const QUERY_OFFSET: f64 = 0.5;
/// Jitter of gold memories off their arc, as a fraction of `spread`.
const GOLD_JITTER: f64 = 0.05;
/// Far gold sits this many radians past the neighborhood radius (per item, uniform).
const FAR_MARGIN: (f64, f64) = (0.01, 0.05);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dimension: usize,
    pub corpus_size: usize,
    pub clusters: usize,
    /// Angular radius of a cluster, radians.
    pub spread: f64,
    pub queries: usize,
    pub chain_length: usize,
    /// Fraction of each chain placed outside the query's own cluster.
    pub dispersion: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dimension: 32,
            corpus_size: 2000,
            clusters: 8,
            spread: 1.1,
            queries: 20,
            chain_length: 6,
            dispersion: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let mut spec = SyntheticSpec::default();
        for entry in read_kv(path)? {
            spec.apply(&entry, &name)?;
        }
        Ok(spec)
    }

    pub fn apply(&mut self, entry: &Entry, source_name: &str) -> Result<()> {
        match entry.key.as_str() {
            "dimension" => self.dimension = parse_value(entry, source_name)?,
            "corpus_size" => self.corpus_size = parse_value(entry, source_name)?,
            "clusters" => self.clusters = parse_value(entry, source_name)?,
            "spread" => self.spread = parse_value(entry, source_name)?,
            "queries" => self.queries = parse_value(entry, source_name)?,
            "chain_length" => self.chain_length = parse_value(entry, source_name)?,
            "dispersion" => self.dispersion = parse_value(entry, source_name)?,
            "seed" => self.seed = parse_value(entry, source_name)?,
            other => {
                return Err(Error::Config {
                    source_name: source_name.to_string(),
                    line: entry.line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Far-gold count per query.
    pub fn far_per_query(&self) -> usize {
        (self.dispersion * self.chain_length as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InfeasibleSpec(m));
        if !(0.0..=1.0).contains(&self.dispersion) {
            return fail(format!("dispersion {} outside [0, 1]", self.dispersion));
        }
        if !(self.spread > 0.0 && self.spread < std::f64::consts::FRAC_PI_2) {
            return fail(format!("spread {} must lie in (0, pi/2)", self.spread));
        }
        if self.dimension < 2 {
            return fail("dimension must be at least 2".into());
        }
        if self.clusters < 2 {
            return fail("need at least 2 clusters".into());
        }
        if self.corpus_size < self.clusters {
            return fail(format!(
                "corpus size {} smaller than cluster count {}",
                self.corpus_size, self.clusters
            ));
        }
        if self.chain_length > self.corpus_size / self.clusters {
            return fail(format!(
                "chain length {} exceeds cluster population {}",
                self.chain_length,
                self.corpus_size / self.clusters
            ));
        }
        let gold = self.queries * self.chain_length;
        if gold + 2 * self.chain_length + self.clusters > self.corpus_size {
            return fail(format!(
                "{gold} gold memories leave too little background in a corpus of {}",
                self.corpus_size
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub records: Vec<MemoryRecord>,
    pub queries: Vec<QueryRecord>,
    pub gold: GoldSet,
}

impl SyntheticData {
    /// Writes `corpus.jsonl`, `queries.jsonl` and `gold.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_jsonl(dir.join("corpus.jsonl"), &self.records)?;
        write_jsonl(dir.join("queries.jsonl"), &self.queries)?;
        self.gold.write(dir.join("gold.json"))
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        if let Some(v) = normalized(&gaussian(rng, dim)) {
            return v;
        }
    }
}

/// `direction` tilted by roughly `angle` radians in a random direction.
fn perturb(rng: &mut ChaCha8Rng, direction: &[f64], angle: f64) -> Vec<f64> {
    let scale = angle.tan() / (direction.len() as f64).sqrt();
    loop {
        let v: Vec<f64> = direction
            .iter()
            .map(|d| d + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if let Some(v) = normalized(&v) {
            return v;
        }
    }
}

/// Unit vector at `angle` from unit `q` toward unit `u` (`u ⟂ q`).
fn on_arc(q: &[f64], u: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    let v: Vec<f64> = q.iter().zip(u).map(|(a, b)| c * a + s * b).collect();
    normalized(&v).expect("arc point is non-zero")
}

/// Component of `v` orthogonal to unit `q`, normalized.
fn orthogonal_direction(v: &[f64], q: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let proj = dot(v, q);
    let r: Vec<f64> = v.iter().zip(q).map(|(a, b)| a - proj * b).collect();
    match normalized(&r) {
        Some(u) if crate::vector::norm(&r) > 1e-9 => u,
        _ => {
            let w = random_unit(rng, q.len());
            orthogonal_direction(&w, q, rng)
        }
    }
}

/// Angle to the `rank`-th nearest vector (1-based), clamped to the pool size.
fn neighborhood_radius(q: &[f64], pool: &[Vec<f64>], rank: usize) -> f64 {
    let mut sims: Vec<f64> = pool.iter().map(|z| dot(q, z)).collect();
    let idx = rank.clamp(1, sims.len()) - 1;
    sims.select_nth_unstable_by(idx, |a, b| b.total_cmp(a));
    sims[idx].clamp(-1.0, 1.0).acos()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dimension;
    let centers: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|_| random_unit(&mut rng, d))
        .collect();

    let n_gold = spec.queries * spec.chain_length;
    let n_background = spec.corpus_size - n_gold;
    // (embedding, cluster label, query owning it as gold)
    let mut memories: Vec<(Vec<f64>, usize, Option<usize>)> = (0..n_background)
        .map(|i| {
            let c = i % spec.clusters;
            (perturb(&mut rng, &centers[c], spec.spread), c, None)
        })
        .collect();
    let background: Vec<Vec<f64>> = memories.iter().map(|m| m.0.clone()).collect();

    let n_far = spec.far_per_query();
    let n_near = spec.chain_length - n_far;
    let mut queries = Vec::with_capacity(spec.queries);
    for qi in 0..spec.queries {
        let home = qi % spec.clusters;
        let bridge = (home + 1 + rng.random_range(0..spec.clusters - 1)) % spec.clusters;
        let q = perturb(&mut rng, &centers[home], QUERY_OFFSET * spec.spread);
        let u = orthogonal_direction(&centers[bridge], &q, &mut rng);
        let radius = neighborhood_radius(&q, &background, 2 * spec.chain_length);
        let jitter = GOLD_JITTER * spec.spread;

        for _ in 0..n_near {
            let angle = 0.5 * radius * rng.random_range(0.9..1.1);
            let z = perturb(&mut rng, &on_arc(&q, &u, angle), jitter);
            memories.push((z, home, Some(qi)));
        }
        for _ in 0..n_far {
            let angle = radius + rng.random_range(FAR_MARGIN.0..FAR_MARGIN.1);
            let z = perturb(&mut rng, &on_arc(&q, &u, angle), jitter);
            memories.push((z, bridge, Some(qi)));
        }
        queries.push((q, home, bridge));
    }

    memories.shuffle(&mut rng);
    let width = (spec.corpus_size.max(1) as f64).log10().floor() as usize + 1;
    let mut gold: BTreeMap<String, Vec<String>> = (0..spec.queries)
        .map(|qi| (query_id(qi, spec.queries), Vec::new()))
        .collect();
    let records = memories
        .into_iter()
        .enumerate()
        .map(|(row, (embedding, cluster, owner))| {
            let id = format!("m{row:0width$}");
            if let Some(qi) = owner {
                gold.get_mut(&query_id(qi, spec.queries))
                    .unwrap()
                    .push(id.clone());
            }
            let mut metadata = BTreeMap::new();
            metadata.insert("cluster".to_string(), cluster.to_string());
            MemoryRecord {
                id,
                text: None,
                embedding,
                metadata,
            }
        })
        .collect();

    let queries = queries
        .into_iter()
        .enumerate()
        .map(|(qi, (embedding, home, bridge))| {
            let id = query_id(qi, spec.queries);
            let mut metadata = BTreeMap::new();
            metadata.insert("cluster".to_string(), home.to_string());
            metadata.insert("bridge".to_string(), bridge.to_string());
            QueryRecord {
                gold: Some(gold[&id].clone()),
                query_id: id,
                embedding,
                metadata,
            }
        })
        .collect();

    Ok(SyntheticData {
        records,
        queries,
        gold: GoldSet(gold),
    })
}

fn query_id(qi: usize, total: usize) -> String {
    let width = (total.max(1) as f64).log10().floor() as usize + 1;
    format!("q{qi:0width$}")
}
