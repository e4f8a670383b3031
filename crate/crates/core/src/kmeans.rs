//! Seeded Lloyd's k-means over unit vectors.
//!
//! Initialization is k-means++ driven by a ChaCha8 stream derived from the
//! caller's seed, so a fixed `(points, k, seed)` always produces the same
//! clustering. Lloyd iterations use raw arithmetic means; centroids are
//! renormalized to unit length only in the returned [`Clustering`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::vector::{normalized, squared_distance};

pub const MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster label for each input point.
    pub assignments: Vec<usize>,
    /// Unit-normalized cluster means.
    pub centroids: Vec<Vec<f64>>,
    /// Input indices per cluster, ascending.
    pub members: Vec<Vec<usize>>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// A clustering plus per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub clustering: Clustering,
    /// Within-cluster sum of squared distances after each assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

/// Clusters `points` into `min(k, points.len())` non-empty groups.
///
/// # Panics
/// If `points` is empty or `k == 0`.
pub fn cluster<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64) -> Clustering {
    cluster_with_history(points, k, seed).clustering
}

pub fn cluster_with_history<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64) -> ClusterRun {
    assert!(!points.is_empty(), "cannot cluster an empty point set");
    assert!(k > 0, "k must be positive");
    let points: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let k = k.min(points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers = kmeans_plus_plus(&points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut sse_history = Vec::new();
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let (next, sse) = assign(&points, &centers);
        sse_history.push(sse);
        if next == assignments {
            break;
        }
        assignments = next;
        centers = update(&points, &assignments, &centers);
    }

    // A reseed on the last permitted iteration, or coincident points, can still
    // leave a cluster empty.
    fill_empty_clusters(&points, &mut assignments, k);
    let members = members_of(&assignments, k);
    let centroids = members.iter().map(|m| unit_mean(&points, m)).collect();

    ClusterRun {
        clustering: Clustering {
            assignments,
            centroids,
            members,
        },
        sse_history,
        iterations,
    }
}

fn kmeans_plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].to_vec()];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, points[first]))
        .collect();

    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just past the running total.
            pick.unwrap_or_else(|| nearest.iter().rposition(|d| *d > 0.0).unwrap())
        } else {
            // All remaining points coincide with a center.
            chosen.iter().position(|c| !c).unwrap()
        };
        chosen[pick] = true;
        centers.push(points[pick].to_vec());
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(squared_distance(p, points[pick]));
        }
    }
    centers
}

/// Nearest center per point (ties to the lowest index) and the resulting SSE.
fn assign(points: &[&[f64]], centers: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut sse = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(c, center)| (c, squared_distance(p, center)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, cur| if cur.1 < acc.1 { cur } else { acc },
                );
            sse += d;
            best
        })
        .collect();
    (labels, sse)
}

fn update(points: &[&[f64]], assignments: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = previous.len();
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        sums[c].iter_mut().zip(p.iter()).for_each(|(s, x)| *s += x);
    }
    let mut centers: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| {
            if n == 0 {
                s
            } else {
                s.into_iter().map(|x| x / n as f64).collect()
            }
        })
        .collect();

    // Empty cluster: move its center onto the point farthest from its own center.
    let mut taken = vec![false; points.len()];
    for c in 0..k {
        if counts[c] != 0 {
            continue;
        }
        let far = points
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, p)| (i, squared_distance(p, &centers[assignments[i]])))
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(a) if a.1 >= cur.1 => Some(a),
                _ => Some(cur),
            });
        if let Some((i, _)) = far {
            taken[i] = true;
            centers[c] = points[i].to_vec();
        }
    }
    centers
}

fn fill_empty_clusters(points: &[&[f64]], assignments: &mut [usize], k: usize) {
    loop {
        let members = members_of(assignments, k);
        let Some(empty) = members.iter().position(Vec::is_empty) else {
            return;
        };
        let centers: Vec<Vec<f64>> = members.iter().map(|m| raw_mean(points, m)).collect();
        // Farthest point among clusters that can spare one.
        let donor = (0..points.len())
            .filter(|&i| members[assignments[i]].len() > 1)
            .map(|i| (i, squared_distance(points[i], &centers[assignments[i]])))
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(a) if a.1 >= cur.1 => Some(a),
                _ => Some(cur),
            });
        match donor {
            Some((i, _)) => assignments[i] = empty,
            None => return,
        }
    }
}

fn members_of(assignments: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (i, &c) in assignments.iter().enumerate() {
        members[c].push(i);
    }
    members
}

fn raw_mean(points: &[&[f64]], members: &[usize]) -> Vec<f64> {
    let dim = points[0].len();
    let mut sum = vec![0.0; dim];
    for &i in members {
        sum.iter_mut().zip(points[i]).for_each(|(s, x)| *s += x);
    }
    let n = members.len().max(1) as f64;
    sum.into_iter().map(|x| x / n).collect()
}

fn unit_mean(points: &[&[f64]], members: &[usize]) -> Vec<f64> {
    normalized(&raw_mean(points, members))
        // Members cancel out exactly (e.g. antipodal pairs): anchor on the first member.
        .unwrap_or_else(|| points[members[0]].to_vec())
}

/// Within-cluster SSE against raw means.
pub fn within_cluster_sse<P: AsRef<[f64]>>(points: &[P], assignments: &[usize], k: usize) -> f64 {
    let points: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let members = members_of(assignments, k);
    members
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| {
            let c = raw_mean(&points, m);
            m.iter()
                .map(|&i| squared_distance(points[i], &c))
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::norm;

    fn unit(v: &[f64]) -> Vec<f64> {
        normalized(v).unwrap()
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let pts = vec![
            unit(&[1.0, 0.2, 0.0]),
            unit(&[0.1, 1.0, 0.3]),
            unit(&[0.0, 0.3, 1.0]),
        ];
        let c = cluster(&pts, 1, 7);
        assert_eq!(c.members, vec![vec![0, 1, 2]]);
        let mut mean = vec![0.0; 3];
        for p in &pts {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += x / 3.0;
            }
        }
        let expect = unit(&mean);
        for (a, b) in c.centroids[0].iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = vec![
            unit(&[1.0, 0.0]),
            unit(&[0.0, 1.0]),
            unit(&[-1.0, 0.2]),
            unit(&[0.3, -1.0]),
        ];
        let c = cluster(&pts, 4, 3);
        assert_eq!(c.k(), 4);
        for m in &c.members {
            assert_eq!(m.len(), 1);
            let p = &pts[m[0]];
            let centroid = &c.centroids[c.assignments[m[0]]];
            for (a, b) in p.iter().zip(centroid) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_is_clamped() {
        let pts = vec![unit(&[1.0, 0.0])];
        let c = cluster(&pts, 5, 0);
        assert_eq!(c.k(), 1);
        assert_eq!(c.members, vec![vec![0]]);
    }

    #[test]
    fn separated_pairs() {
        let pts = vec![
            unit(&[1.0, 0.05]),
            unit(&[0.05, 1.0]),
            unit(&[1.0, -0.05]),
            unit(&[-0.05, 1.0]),
        ];
        // Exhaustive oracle over all 2-partitions (first point fixed in group 0).
        let mut best = (f64::INFINITY, 0u32);
        for mask in 0u32..8 {
            let labels: Vec<usize> = (0..4)
                .map(|i| {
                    if i == 0 {
                        0
                    } else {
                        ((mask >> (i - 1)) & 1) as usize
                    }
                })
                .collect();
            if labels.iter().all(|&l| l == 0) {
                continue;
            }
            let sse = within_cluster_sse(&pts, &labels, 2);
            if sse < best.0 {
                best = (sse, mask);
            }
        }
        let oracle: Vec<usize> = (0..4)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    ((best.1 >> (i - 1)) & 1) as usize
                }
            })
            .collect();
        assert_eq!(oracle, vec![0, 1, 0, 1]);

        for seed in 0..20 {
            let c = cluster(&pts, 2, seed);
            let a = &c.assignments;
            assert_eq!(a[0], a[2]);
            assert_eq!(a[1], a[3]);
            assert_ne!(a[0], a[1]);
            let pair0 = unit(&[2.0, 0.0]);
            for (x, y) in c.centroids[a[0]].iter().zip(&pair0) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicates_never_leave_empty_clusters() {
        let p = unit(&[0.3, 0.4, 0.5]);
        let pts = vec![p.clone(), p.clone(), p.clone(), unit(&[1.0, 0.0, 0.0])];
        let c = cluster(&pts, 3, 11);
        assert_eq!(c.k(), 3);
        assert!(c.members.iter().all(|m| !m.is_empty()));
        let mut all: Vec<usize> = c.members.concat();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
        for centroid in &c.centroids {
            assert!((norm(centroid) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn antipodal_members_get_a_unit_centroid() {
        let pts = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let c = cluster(&pts, 1, 0);
        assert!((norm(&c.centroids[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                unit(&[
                    (i as f64 * 0.7).sin(),
                    (i as f64 * 1.3).cos(),
                    (i as f64 * 0.11).sin(),
                ])
            })
            .collect();
        let a = cluster(&pts, 4, 99);
        let b = cluster(&pts, 4, 99);
        assert_eq!(a, b);
    }
}
