use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use super::GoodBallConfig;
use crate::error::{invalid, Error, Result};
use crate::hierarchy::{ball_point_count, checked_power};
use crate::numerics::{prob_any_edge, Proportion};
use crate::profiles::ConnectionProfile;
use crate::rng::{stream, tag};
use crate::sampler::{largest_cluster, par_replicates, realize_ball, GraphRealization};
use crate::unionfind::UnionFind;

/// Largest ball simulated by the cascade tools (`2^24` points); beyond it only
/// the closed-form certificate is supported.
pub const MAX_CASCADE_POINTS: u64 = 1 << 24;

/// The graph whose vertices are the good sub-balls of a realized ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormalizedGraph {
    pub level: u32,
    pub sub_level: u32,
    pub sub_balls: u64,
    /// Indices of the good sub-balls.
    pub vertices: Vec<u64>,
    /// Size of the chosen largest cluster of each good sub-ball.
    pub cluster_sizes: Vec<u64>,
    /// Vertex pairs `(u, v)`, `u < v`, whose clusters share an edge.
    pub edges: Vec<(usize, usize)>,
    /// One component and no isolated vertex.
    pub connected: bool,
    /// Size of the component of the full ball containing the merged clusters
    /// (0 when not connected).
    pub merged_size: u64,
}

/// Builds the renormalized graph of `real` at sub-level `sub_level`.
///
/// Each sub-ball's largest cluster uses only edges inside that sub-ball
/// (distance at most `sub_level`); ties are broken uniformly from a stream
/// keyed by the sub-ball. Two good sub-balls are adjacent when a longer edge
/// joins their clusters.
pub fn renormalized_graph(
    real: &GraphRealization,
    sub_level: u32,
    config: &GoodBallConfig,
) -> Result<RenormalizedGraph> {
    config.validate()?;
    if sub_level == 0 || sub_level >= real.k {
        return invalid(format!(
            "sub-level {sub_level} must lie in 1..{} for a {}-ball",
            real.k, real.k
        ));
    }
    if !real.has_edges() {
        return invalid("the renormalized graph needs a realization with retained edges");
    }
    let base = real.base;
    let points = real.points() as usize;
    let sub_size = ball_point_count(base, sub_level)? as usize;
    let sub_balls = (points / sub_size) as u64;

    let mut inner = UnionFind::new(points);
    for (m, x, y) in real.all_edges()? {
        if m <= sub_level {
            inner.union(x as usize, y as usize);
        }
    }

    // vertex id of every point lying in a chosen good cluster
    let mut label = vec![usize::MAX; points];
    let mut vertices = Vec::new();
    let mut cluster_sizes = Vec::new();
    let mut members_of = Vec::new();
    for s in 0..sub_balls as usize {
        let range = s * sub_size..(s + 1) * sub_size;
        let mut sizes: Vec<(usize, usize)> = Vec::new();
        for x in range.clone() {
            if inner.find(x) == x {
                sizes.push((x, inner.set_size(x)));
            }
        }
        let largest = sizes.iter().map(|&(_, c)| c).max().unwrap_or(0);
        let maximal: Vec<usize> = sizes
            .iter()
            .filter(|e| e.1 == largest)
            .map(|e| e.0)
            .collect();
        let root = if maximal.len() > 1 {
            let path = [
                real.replicate,
                real.k as u64,
                sub_level as u64,
                s as u64,
                tag::TIE_BREAK,
            ];
            maximal[stream(real.seed, &path).random_range(0..maximal.len())]
        } else {
            maximal[0]
        };
        if !config.is_good(base, sub_level, largest as u64) {
            continue;
        }
        let id = vertices.len();
        let members: Vec<usize> = range.filter(|&x| inner.find(x) == root).collect();
        for &x in &members {
            label[x] = id;
        }
        vertices.push(s as u64);
        cluster_sizes.push(largest as u64);
        members_of.push(members);
    }

    let mut vgraph = UnionFind::new(vertices.len());
    let mut edges = BTreeSet::new();
    for (m, x, y) in real.all_edges()? {
        if m <= sub_level {
            continue;
        }
        let (u, v) = (label[x as usize], label[y as usize]);
        if u != usize::MAX && v != usize::MAX {
            edges.insert((u.min(v), u.max(v)));
            vgraph.union(u, v);
        }
    }
    let connected = !vertices.is_empty() && vgraph.component_count() == 1;

    let mut merged_size = 0;
    if connected {
        let full = real.forest();
        let root = full.root(members_of[0][0]);
        merged_size = (0..points).filter(|&x| full.root(x) == root).count() as u64;
        let claimed: u64 = cluster_sizes.iter().sum();
        let floor = vertices.len() as f64 * config.threshold(base, sub_level);
        assert!(
            merged_size >= claimed && claimed as f64 >= floor * (1.0 - 1e-12),
            "merged cluster {merged_size} below the sum of good clusters {claimed}"
        );
    }

    Ok(RenormalizedGraph {
        level: real.k,
        sub_level,
        sub_balls,
        vertices,
        cluster_sizes,
        edges: edges.into_iter().collect(),
        connected,
        merged_size,
    })
}

/// `1 - (1 - p_(k_{n+1}))^{β² N^{2 k_n}}`: the probability floor for two
/// β-good clusters of sub-level `sub_level` to share an edge within the
/// `level`-ball, using the smallest connection probability available.
pub fn cluster_connection_lower_bound(
    profile: &ConnectionProfile,
    sub_level: u32,
    level: u32,
    beta: f64,
) -> Result<f64> {
    let ln_p = profile.ln_connection_probability(level as u64)?;
    let ln_pairs = 2.0 * beta.ln() + 2.0 * sub_level as f64 * (profile.base as f64).ln();
    Ok(prob_any_edge(ln_p, ln_pairs))
}

/// Monte Carlo estimate of the probability that the k-ball is good.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodBallEstimate {
    pub k: u32,
    pub threshold: f64,
    pub proportion: Proportion,
}

pub fn good_ball_probability(
    profile: &ConnectionProfile,
    config: &GoodBallConfig,
    k: u32,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<GoodBallEstimate> {
    config.validate()?;
    let points = checked_power(profile.base, k)?;
    if points > MAX_CASCADE_POINTS {
        return Err(Error::InfeasibleScale(format!(
            "N^k = {points} exceeds the cascade simulation limit {MAX_CASCADE_POINTS}"
        )));
    }
    let hits = par_replicates(replicates, workers, |r| {
        realize_ball(profile, k, seed, r, false)
            .map(|real| config.is_good(profile.base, k, largest_cluster(&real).largest))
    });
    let hits: Vec<bool> = hits.into_iter().collect::<Result<_>>()?;
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    Ok(GoodBallEstimate {
        k,
        threshold: config.threshold(profile.base, k),
        proportion: Proportion::wilson(successes, replicates, 1.96),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::index_distance;
    use crate::sampler::{clusters_connected, realization_from_edges};

    #[test]
    fn edgeless_and_complete() {
        let empty = realization_from_edges(2, 4, &[], 1, 0).unwrap();
        let g = renormalized_graph(&empty, 2, &GoodBallConfig::Beta { beta: 0.25 }).unwrap();
        assert_eq!(g.vertices.len(), 4);
        assert!(g.edges.is_empty());
        assert!(!g.connected);

        let all: Vec<(u64, u64)> = (0..16)
            .flat_map(|x| (x + 1..16).map(move |y| (x, y)))
            .collect();
        let full = realization_from_edges(2, 4, &all, 1, 0).unwrap();
        let g = renormalized_graph(&full, 2, &GoodBallConfig::Beta { beta: 1.0 }).unwrap();
        assert_eq!(g.vertices.len(), 4);
        assert_eq!(g.edges.len(), 6);
        assert!(g.connected);
        assert_eq!(g.merged_size, 16);
    }

    #[test]
    fn needs_retained_edges() {
        let p = ConnectionProfile::constant(2, 1.0, 3.0).unwrap();
        let real = realize_ball(&p, 4, 1, 0, false).unwrap();
        assert!(renormalized_graph(&real, 2, &GoodBallConfig::Beta { beta: 0.5 }).is_err());
    }

    #[test]
    fn adjacency_matches_pairwise_check() {
        let p = ConnectionProfile::constant(2, 1.0, 6.0).unwrap();
        let config = GoodBallConfig::Beta { beta: 0.25 };
        for r in 0..30 {
            let real = realize_ball(&p, 8, 17, r, true).unwrap();
            let g = renormalized_graph(&real, 4, &config).unwrap();
            // rebuild each chosen cluster from within-sub-ball edges
            let mut inner = UnionFind::new(256);
            for (m, x, y) in real.all_edges().unwrap() {
                if m <= 4 {
                    inner.union(x as usize, y as usize);
                }
            }
            let clusters: Vec<Vec<u64>> = g
                .vertices
                .iter()
                .zip(&g.cluster_sizes)
                .map(|(&s, &size)| {
                    let range = s * 16..(s + 1) * 16;
                    let mut best: Vec<Vec<u64>> = Vec::new();
                    for x in range.clone() {
                        let root = inner.find(x as usize);
                        let set: Vec<u64> = range
                            .clone()
                            .filter(|&y| inner.find(y as usize) == root)
                            .collect();
                        if set.len() as u64 == size && set[0] == x {
                            best.push(set);
                        }
                    }
                    assert!(!best.is_empty());
                    best.remove(0)
                })
                .collect();
            for u in 0..clusters.len() {
                for v in u + 1..clusters.len() {
                    // with ties the chosen cluster may differ, so only compare untied sub-balls
                    if clusters[u].len() * 2 > 16 && clusters[v].len() * 2 > 16 {
                        let joined = clusters_connected(&real, &clusters[u], &clusters[v]).unwrap();
                        assert_eq!(joined, g.edges.contains(&(u, v)));
                    }
                }
            }
            for &(u, v) in &g.edges {
                assert!(index_distance(2, g.vertices[u] * 16, g.vertices[v] * 16) > 4);
            }
        }
    }

    #[test]
    fn good_ball_trivial_cases() {
        let p = ConnectionProfile::constant(2, 1.0, 2.0).unwrap();
        let k = 6;
        let beta = 2f64.powi(-(k as i32));
        let e = good_ball_probability(&p, &GoodBallConfig::Beta { beta }, k, 40, 5, 2).unwrap();
        assert_eq!(e.proportion.estimate, 1.0);
        let sure = ConnectionProfile::constant(2, 1.0, 1e12).unwrap();
        let e =
            good_ball_probability(&sure, &GoodBallConfig::Beta { beta: 1.0 }, k, 40, 5, 2).unwrap();
        assert_eq!(e.proportion.estimate, 1.0);
        let big = good_ball_probability(&p, &GoodBallConfig::Beta { beta: 0.5 }, 25, 1, 5, 1);
        assert!(matches!(big, Err(Error::InfeasibleScale(_))));
    }

    #[test]
    fn good_ball_deterministic_across_workers() {
        let p = ConnectionProfile::constant(2, 1.0, 5.0).unwrap();
        let c = GoodBallConfig::Beta { beta: 0.3 };
        let a = good_ball_probability(&p, &c, 7, 64, 3, 1).unwrap();
        let b = good_ball_probability(&p, &c, 7, 64, 3, 4).unwrap();
        assert_eq!(a, b);
    }
}
