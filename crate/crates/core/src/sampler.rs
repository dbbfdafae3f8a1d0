//! Realizations of the random graph restricted to the k-ball containing the origin.
//!
//! Edges are drawn one distance class at a time. For class `m` the number of
//! edges is `Bin(P_m, p_(m))`, obtained by inverting the binomial CDF at one
//! uniform draw; the edges themselves are the first entries of a uniformly
//! random ordering of the `P_m` distance-m pairs (a lazily materialized
//! Fisher-Yates shuffle). Both steps read the same per-class stream, so raising
//! `p_(m)` with the seed fixed only appends edges: realizations are coupled
//! monotonically.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{invalid, Error, Result};
use crate::hierarchy::{ball_point_count, checked_power, index_distance, pair_count_at_distance};
use crate::numerics::{ln_binomial_pmf, prob_any_edge};
use crate::profiles::ConnectionProfile;
use crate::rng::{stream, tag};
use crate::unionfind::UnionFind;

/// Largest ball that [`realize_ball`] will allocate (`2^26` points).
pub const MAX_REALIZED_POINTS: u64 = 1 << 26;

/// One sampled graph on a k-ball.
#[derive(Debug, Clone)]
pub struct GraphRealization {
    pub base: u32,
    pub k: u32,
    pub seed: u64,
    pub replicate: u64,
    forest: UnionFind,
    /// Edge count for each distance class `m = 1..=k` (index `m-1`).
    pub edge_counts: Vec<u64>,
    /// Retained edges per distance class, `(x, y)` with `x < y`.
    edges: Option<Vec<Vec<(u64, u64)>>>,
}

/// Largest-cluster statistics of a realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub points: u64,
    pub largest: u64,
    pub density: f64,
    /// Union-find root of the selected largest cluster.
    pub chosen_root: usize,
    /// Number of maximal clusters the selection was drawn from.
    pub tied: usize,
    /// Component size → number of components of that size.
    pub histogram: BTreeMap<u64, u64>,
}

/// Inverse of the Bin(n, p) CDF: the least `x` with `F(x) ≥ u`.
///
/// Nondecreasing in `p` for fixed `u`, which is what makes the class-level
/// coupling monotone.
pub fn binomial_quantile(n: u64, p: f64, u: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let mean = n as f64 * p;
    let odds = p / (1.0 - p);
    if mean < 30.0 {
        let mut pmf = (n as f64 * (-p).ln_1p()).exp();
        let mut cdf = pmf;
        let mut x = 0u64;
        while cdf < u && x < n {
            pmf *= (n - x) as f64 / (x + 1) as f64 * odds;
            x += 1;
            cdf += pmf;
            if pmf == 0.0 && x as f64 > mean {
                break;
            }
        }
        return x;
    }
    // Anchor the walk at the mode with an exact CDF value, then step by masses.
    let dist = Binomial::new(p, n).expect("valid binomial parameters");
    let mut x = ((n as f64 + 1.0) * p).floor().min(n as f64) as u64;
    let mut cdf = dist.cdf(x);
    if cdf >= u {
        while x > 0 {
            let below = cdf - ln_binomial_pmf(n, p, x).exp();
            if below < u {
                break;
            }
            cdf = below;
            x -= 1;
        }
        x
    } else {
        while cdf < u && x < n {
            x += 1;
            let mass = ln_binomial_pmf(n, p, x).exp();
            cdf += mass;
            if mass == 0.0 {
                break;
            }
        }
        x
    }
}

/// Maps `index ∈ [0, P_m)` to the distance-m pair it enumerates.
///
/// Pairs are ordered by enclosing m-ball, then by the unordered pair of
/// distinct (m-1)-sub-balls, then by the offsets inside those sub-balls.
pub fn decode_pair(base: u32, m: u32, index: u64) -> (u64, u64) {
    let nb = base as u64;
    let sub = nb.pow(m - 1);
    let sub_sq = sub * sub;
    let per_ball = nb * (nb - 1) / 2 * sub_sq;
    let ball = index / per_ball;
    let rest = index % per_ball;
    let mut pair_id = rest / sub_sq;
    let offsets = rest % sub_sq;
    let mut first = 0u64;
    while pair_id >= nb - 1 - first {
        pair_id -= nb - 1 - first;
        first += 1;
    }
    let second = first + 1 + pair_id;
    let origin = ball * sub * nb;
    let x = origin + first * sub + offsets / sub;
    let y = origin + second * sub + offsets % sub;
    (x, y)
}

/// Draws `count` distinct values from `0..population` in uniformly random order.
fn sample_distinct<R: Rng>(rng: &mut R, population: u64, count: u64) -> Vec<u64> {
    let mut swapped: HashMap<u64, u64> = HashMap::with_capacity(count as usize);
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let j = rng.random_range(i..population);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        out.push(at_j);
    }
    out
}

/// Samples the edges of distance class `m` for the given stream coordinates.
fn sample_class(
    profile: &ConnectionProfile,
    k: u32,
    m: u32,
    seed: u64,
    replicate: u64,
) -> Result<Vec<(u64, u64)>> {
    let population = pair_count_at_distance(profile.base, k, m)?;
    let p = profile.connection_probability(m as u64)?;
    let mut rng = stream(seed, &[replicate, k as u64, m as u64, tag::EDGES]);
    let u: f64 = rng.random();
    let count = binomial_quantile(population, p, u);
    Ok(sample_distinct(&mut rng, population, count)
        .into_iter()
        .map(|idx| decode_pair(profile.base, m, idx))
        .collect())
}

/// Samples one realization of the graph on the k-ball.
pub fn realize_ball(
    profile: &ConnectionProfile,
    k: u32,
    seed: u64,
    replicate: u64,
    retain_edges: bool,
) -> Result<GraphRealization> {
    profile.validate()?;
    if k == 0 {
        return invalid("ball level must be at least 1");
    }
    let points = ball_point_count(profile.base, k)?;
    if points > MAX_REALIZED_POINTS {
        return Err(Error::InfeasibleScale(format!(
            "a {k}-ball with N={} has {points} points (limit {MAX_REALIZED_POINTS})",
            profile.base
        )));
    }
    let mut forest = UnionFind::new(points as usize);
    let mut edge_counts = Vec::with_capacity(k as usize);
    let mut kept = retain_edges.then(Vec::new);
    for m in 1..=k {
        let edges = sample_class(profile, k, m, seed, replicate)?;
        for &(x, y) in &edges {
            forest.union(x as usize, y as usize);
        }
        edge_counts.push(edges.len() as u64);
        if let Some(kept) = kept.as_mut() {
            kept.push(edges);
        }
    }
    Ok(GraphRealization {
        base: profile.base,
        k,
        seed,
        replicate,
        forest,
        edge_counts,
        edges: kept,
    })
}

/// Realization built from an explicit edge list (distance classes are inferred).
pub fn realization_from_edges(
    base: u32,
    k: u32,
    edges: &[(u64, u64)],
    seed: u64,
    replicate: u64,
) -> Result<GraphRealization> {
    let points = ball_point_count(base, k)?;
    let mut forest = UnionFind::new(points as usize);
    let mut classes = vec![Vec::new(); k as usize];
    for &(x, y) in edges {
        if x >= points || y >= points || x == y {
            return invalid(format!("edge ({x}, {y}) is not a pair of the {k}-ball"));
        }
        let (x, y) = (x.min(y), x.max(y));
        let m = index_distance(base, x, y);
        classes[m as usize - 1].push((x, y));
        forest.union(x as usize, y as usize);
    }
    Ok(GraphRealization {
        base,
        k,
        seed,
        replicate,
        forest,
        edge_counts: classes.iter().map(|c| c.len() as u64).collect(),
        edges: Some(classes),
    })
}

impl GraphRealization {
    pub fn points(&self) -> u64 {
        self.forest.len() as u64
    }

    pub fn forest(&self) -> &UnionFind {
        &self.forest
    }

    pub fn has_edges(&self) -> bool {
        self.edges.is_some()
    }

    /// Retained edges of distance class `m`.
    pub fn edges_at(&self, m: u32) -> Result<&[(u64, u64)]> {
        let edges = self.retained()?;
        if m == 0 || m > self.k {
            return invalid(format!("distance class {m} outside 1..={}", self.k));
        }
        Ok(&edges[m as usize - 1])
    }

    /// Every retained edge with its distance class.
    pub fn all_edges(&self) -> Result<impl Iterator<Item = (u32, u64, u64)> + '_> {
        let edges = self.retained()?;
        Ok(edges
            .iter()
            .enumerate()
            .flat_map(|(i, class)| class.iter().map(move |&(x, y)| (i as u32 + 1, x, y))))
    }

    fn retained(&self) -> Result<&Vec<Vec<(u64, u64)>>> {
        self.edges.as_ref().ok_or_else(|| {
            Error::InvalidInput("realization was built without retained edges".into())
        })
    }

    /// Root of the component of every point.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut f = self.forest.clone();
        f.roots()
    }

    /// Points of the component rooted at `root`.
    pub fn members(&self, root: usize) -> Vec<u64> {
        (0..self.forest.len())
            .filter(|&i| self.forest.root(i) == root)
            .map(|i| i as u64)
            .collect()
    }
}

/// Largest cluster of the realization; ties are broken by a uniform draw
/// from the realization's own tie-break stream.
pub fn largest_cluster(real: &GraphRealization) -> ClusterSummary {
    let mut forest = real.forest.clone();
    let sizes = forest.component_sizes();
    let largest = sizes.iter().map(|&(_, s)| s).max().unwrap_or(0);
    let maximal: Vec<usize> = sizes
        .iter()
        .filter(|&&(_, s)| s == largest)
        .map(|&(r, _)| r)
        .collect();
    let mut rng = stream(real.seed, &[real.replicate, real.k as u64, tag::TIE_BREAK]);
    let chosen_root = if maximal.len() > 1 {
        maximal[rng.random_range(0..maximal.len())]
    } else {
        maximal.first().copied().unwrap_or(0)
    };
    let mut histogram = BTreeMap::new();
    for &(_, s) in &sizes {
        *histogram.entry(s as u64).or_insert(0) += 1;
    }
    let points = real.points();
    ClusterSummary {
        points,
        largest: largest as u64,
        density: largest as f64 / points as f64,
        chosen_root,
        tied: maximal.len(),
        histogram,
    }
}

/// Whether some edge joins the two (disjoint) point sets.
pub fn clusters_connected(real: &GraphRealization, a: &[u64], b: &[u64]) -> Result<bool> {
    const NONE: u8 = 0;
    const IN_A: u8 = 1;
    const IN_B: u8 = 2;
    let n = real.points();
    let mut mark = vec![NONE; n as usize];
    for &x in a {
        if x >= n {
            return Err(Error::OutOfRange { index: x, bound: n });
        }
        mark[x as usize] = IN_A;
    }
    for &y in b {
        if y >= n {
            return Err(Error::OutOfRange { index: y, bound: n });
        }
        if mark[y as usize] == IN_A {
            return invalid(format!("clusters overlap at point {y}"));
        }
        mark[y as usize] = IN_B;
    }
    let joined = real
        .all_edges()?
        .any(|(_, x, y)| mark[x as usize] | mark[y as usize] == IN_A | IN_B);
    Ok(joined)
}

/// Exact probability that the k-ball has an edge to the (j, j+1]-annulus around it:
/// `1 - (1 - p_(j+1))^{N^k N^j (N-1)}`.
pub fn exact_boundary_connection_prob(profile: &ConnectionProfile, k: u32, j: u32) -> Result<f64> {
    if j < k {
        return invalid(format!("annulus index j={j} must be at least k={k}"));
    }
    let ln_p = profile.ln_connection_probability(j as u64 + 1)?;
    let base = profile.base as f64;
    let ln_pairs = (k + j) as f64 * base.ln() + (base - 1.0).ln();
    Ok(prob_any_edge(ln_p, ln_pairs))
}

/// The union bound `c_{j+1} N^k N^j (N-1) / N^{(j+1)(1+δ)}` on the same event.
pub fn boundary_connection_bound(profile: &ConnectionProfile, k: u32, j: u32) -> Result<f64> {
    let c = profile.c(j as u64 + 1)?;
    let base = profile.base as f64;
    let ln = c.ln() + (k + j) as f64 * base.ln() + (base - 1.0).ln()
        - (j + 1) as f64 * (1.0 + profile.delta) * base.ln();
    Ok(ln.exp())
}

/// One draw of the indicator that the k-ball connects to the (j, j+1]-annulus.
///
/// The event is a union over independent pair edges, so the indicator is a
/// Bernoulli variable with the exact probability; no lattice is materialized.
pub fn boundary_connection_indicator(
    profile: &ConnectionProfile,
    k: u32,
    j: u32,
    seed: u64,
) -> Result<bool> {
    let p = exact_boundary_connection_prob(profile, k, j)?;
    let mut rng = stream(seed, &[k as u64, j as u64, tag::INDICATOR]);
    Ok(rng.random::<f64>() < p)
}

/// Runs `task(replicate)` for every replicate on a pool of `workers` threads
/// (0 = rayon default) and returns results in replicate order.
pub fn par_replicates<T, F>(replicates: u64, workers: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let run = || {
        (0..replicates)
            .into_par_iter()
            .map(&task)
            .collect::<Vec<T>>()
    };
    if workers == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// Mean largest-cluster density at one ball level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityPoint {
    pub k: u32,
    pub replicates: u64,
    pub mean_density: f64,
    pub std_density: f64,
    pub mean_largest: f64,
    pub mean_edges: f64,
}

/// Mean density `|X_k| / N^k` over replicates for each level in `levels`.
pub fn density_curve(
    profile: &ConnectionProfile,
    levels: &[u32],
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<DensityPoint>> {
    levels
        .iter()
        .map(|&k| {
            checked_power(profile.base, k)?;
            let runs = par_replicates(replicates, workers, |r| {
                realize_ball(profile, k, seed, r, false).map(|real| {
                    let s = largest_cluster(&real);
                    (s.density, s.largest, real.edge_counts.iter().sum::<u64>())
                })
            });
            let runs: Vec<(f64, u64, u64)> = runs.into_iter().collect::<Result<_>>()?;
            let n = runs.len() as f64;
            let mean = runs.iter().map(|r| r.0).sum::<f64>() / n;
            let var = runs.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            Ok(DensityPoint {
                k,
                replicates,
                mean_density: mean,
                std_density: var.sqrt(),
                mean_largest: runs.iter().map(|r| r.1 as f64).sum::<f64>() / n,
                mean_edges: runs.iter().map(|r| r.2 as f64).sum::<f64>() / n,
            })
        })
        .collect()
}
