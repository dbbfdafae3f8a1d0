//! Erdős–Rényi connectivity: an exact recursion, a Monte Carlo estimator,
//! Durrett's lower bound and the binomial large-deviation bounds.
//!
//! "Connected" means a single component covering every vertex.

use rand::Rng;
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::error::{invalid, regime, Result};
use crate::numerics::{binomial_upper_tail, CompensatedSum, Proportion};
use crate::rng::{stream, tag};
use crate::sampler::par_replicates;
use crate::unionfind::UnionFind;

/// Largest `n` accepted by [`exact_connectivity`].
pub const MAX_EXACT_N: u64 = 400;

/// Edge probability `a ln n / n`, clamped to 1. The flag reports clamping.
pub fn log_scaled_p(n: u64, a: f64) -> (f64, bool) {
    let nf = n as f64;
    let p = a * nf.ln() / nf;
    if p > 1.0 {
        (1.0, true)
    } else {
        (p.max(0.0), false)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("edge probability {p} outside [0, 1]"));
    }
    Ok(())
}

/// Connection and disconnection probabilities of `G(m, p)` for `m = 1..=n`.
///
/// Uses `P(m) = 1 - Σ_{k<m} C(m-1, k-1) P(k) (1-p)^{k(m-k)}`, the sum being the
/// probability that the component of vertex 1 has exactly `k < m` vertices.
/// The sum is kept as well, since `1 - P(m)` loses digits when `P(m) ≈ 1`.
/// In floating point the subtraction also loses relative accuracy when
/// `P(m)` is itself tiny, hence the cap at 400 vertices.
fn connectivity_table(n: u64, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_p(p)?;
    if n == 0 || n > MAX_EXACT_N {
        return invalid(format!(
            "exact connectivity needs 1 <= n <= {MAX_EXACT_N}, got {n}"
        ));
    }
    let ln_q = (-p).ln_1p();
    let mut conn = vec![0.0f64; n as usize + 1];
    let mut disc = vec![0.0; n as usize + 1];
    conn[1] = 1.0;
    for m in 2..=n {
        let mut s = CompensatedSum::new();
        for k in 1..m {
            let pk = conn[k as usize];
            if pk == 0.0 {
                continue;
            }
            let ln_t = ln_binomial(m - 1, k - 1) + pk.ln() + (k * (m - k)) as f64 * ln_q;
            s.add(ln_t.exp());
        }
        let d = s.value().clamp(0.0, 1.0);
        disc[m as usize] = d;
        conn[m as usize] = 1.0 - d;
    }
    Ok((conn, disc))
}

/// `P(G(n, p) is connected)` for `n <= 400`.
pub fn exact_connectivity(n: u64, p: f64) -> Result<f64> {
    Ok(connectivity_table(n, p)?.0[n as usize])
}

/// `P(G(n, p) is not connected)`, accurate when that probability is small.
pub fn exact_disconnectivity(n: u64, p: f64) -> Result<f64> {
    Ok(connectivity_table(n, p)?.1[n as usize])
}

/// Whether one sampled `G(n, p)` is connected.
fn sample_connected(n: u64, p: f64, seed: u64, replicate: u64) -> bool {
    let mut rng = stream(seed, &[replicate, n, tag::ER_GRAPH]);
    let mut uf = UnionFind::new(n as usize);
    for x in 0..n as usize {
        for y in x + 1..n as usize {
            if rng.random::<f64>() < p {
                uf.union(x, y);
            }
        }
    }
    uf.component_count() <= 1
}

/// Monte Carlo estimate of `P(G(n, p) is connected)` with a 95% Wilson interval.
pub fn mc_connectivity(
    n: u64,
    p: f64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<Proportion> {
    check_p(p)?;
    if n == 0 {
        return invalid("graph needs at least one vertex");
    }
    let hits = par_replicates(replicates, workers, |r| sample_connected(n, p, seed, r));
    let successes = hits.into_iter().filter(|&h| h).count() as u64;
    Ok(Proportion::wilson(successes, replicates, 1.96))
}

/// Durrett's lower bound on `P(G(n, a ln n / n) is connected)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DurrettBound {
    pub n: f64,
    pub a: f64,
    /// The bound clamped to `[0, 1]`.
    pub value: f64,
    /// The displayed product when the bracket is positive, otherwise the
    /// (nonpositive) bracket itself.
    pub raw: f64,
    pub clamped: bool,
}

/// `[(1 - 14(a ln n)^13 e^{13 a ln n / n} / n^a)(1 - n^{-2.1})(1 - n^{-2})]^n
///  · (1 - e^{-(ln n)^3 / 100})^{n(n-1)}`, for real `n > 1`.
///
/// For small `n` the first factor is hugely negative and raising it to the
/// power `n` would be meaningless, so the bracket is reported as the raw value.
pub fn durrett_lower_bound(n: f64, a: f64) -> Result<DurrettBound> {
    if !(a > 1.0) {
        return regime(format!("Durrett's bound needs a > 1, got a = {a}"));
    }
    if !(n > 1.0) || !n.is_finite() {
        return invalid(format!("Durrett's bound needs finite n > 1, got {n}"));
    }
    let l = n.ln();
    let ln_t1 = 14f64.ln() + 13.0 * (a * l).ln() + 13.0 * a * l / n - a * l;
    let f1 = -ln_t1.exp_m1();
    let f2 = 1.0 - (-2.1 * l).exp();
    let f3 = 1.0 - (-2.0 * l).exp();
    let bracket = f1 * f2 * f3;
    if bracket <= 0.0 {
        return Ok(DurrettBound {
            n,
            a,
            value: 0.0,
            raw: bracket,
            clamped: true,
        });
    }
    let ln_tail = n * (n - 1.0) * (-(-l.powi(3) / 100.0).exp()).ln_1p();
    let ln_raw = n * bracket.ln() + ln_tail;
    let raw = ln_raw.exp();
    Ok(DurrettBound {
        n,
        a,
        value: raw.clamp(0.0, 1.0),
        raw,
        clamped: !(0.0..=1.0).contains(&raw),
    })
}

/// `M[(ln n)^13 n^{1-a} + 1/n + exp(-L (ln n)^e n^2)]` with `e = 13` or `3`.
///
/// The two exponents correspond to two readings of the source display; the
/// flag selects one without privileging it.
pub fn nonconnectivity_upper_bound(
    n: f64,
    a: f64,
    m: f64,
    l: f64,
    exponent13: bool,
) -> Result<f64> {
    if !(a > 1.0) {
        return regime(format!(
            "the non-connectivity bound needs a > 1, got a = {a}"
        ));
    }
    if !(n > 1.0) || m < 0.0 || l < 0.0 {
        return invalid("the non-connectivity bound needs n > 1 and M, L >= 0");
    }
    let ln_n = n.ln();
    let e = if exponent13 { 13 } else { 3 };
    let t1 = (13.0 * ln_n.ln() + (1.0 - a) * ln_n).exp();
    let t2 = 1.0 / n;
    let t3 = (-l * ln_n.powi(e) * n * n).exp();
    Ok(m * (t1 + t2 + t3))
}

/// Smallest `M` (on a doubling grid starting at `1/64`) such that, with
/// `L = 1`, the non-connectivity bound dominates `1 - durrett_lower_bound`
/// for every integer `n` in the range.
pub fn fit_nonconnectivity_constants(
    a: f64,
    n_lo: u64,
    n_hi: u64,
    exponent13: bool,
) -> Result<(f64, f64)> {
    let l = 1.0;
    let mut m = 1.0 / 64.0;
    for _ in 0..80 {
        let mut ok = true;
        for n in n_lo..=n_hi {
            let lower = durrett_lower_bound(n as f64, a)?.value;
            if 1.0 - lower > nonconnectivity_upper_bound(n as f64, a, m, l, exponent13)? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok((m, l));
        }
        m *= 2.0;
    }
    invalid("no M up to 2^74 makes the bound dominate")
}

/// `h(c) = ln c - 1 + 1/c`.
pub fn h(c: f64) -> f64 {
    c.ln() - 1.0 + 1.0 / c
}

/// `e^{-h(c) x}`, bounding `P(Y >= x)` for `Y ~ Bin(n, q)` when `x >= c n q`.
pub fn binomial_tail_bound(n: u64, q: f64, x: f64, c: f64) -> Result<f64> {
    check_p(q)?;
    if !(c > 1.0) {
        return invalid(format!("the tail bound needs c > 1, got {c}"));
    }
    if x < c * n as f64 * q {
        return invalid(format!(
            "the tail bound needs x >= c n q = {}",
            c * n as f64 * q
        ));
    }
    Ok((-h(c) * x).exp())
}

/// Least integer `>= x`, tolerant of rounding just above an integer.
fn ceil_tolerant(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 * x.abs().max(1.0) {
        r.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// `P(Y >= x)` for `Y ~ Bin(n, q)`.
pub fn exact_binomial_tail(n: u64, q: f64, x: f64) -> Result<f64> {
    check_p(q)?;
    Ok(binomial_upper_tail(n, q, ceil_tolerant(x)))
}

/// Largest `κ` with `h(1+u) >= κ u²` on `(0, ε_max]`, returned with `ε = ε_max`.
pub fn chernoff_kappa(eps_max: f64) -> Result<(f64, f64)> {
    if !(eps_max > 0.0 && eps_max <= 1.0) {
        return invalid(format!("ε_max must lie in (0, 1], got {eps_max}"));
    }
    let ratio = |u: f64| h(1.0 + u) / (u * u);
    // u below 1e-4 suffers cancellation in h; the ratio there is 1/2 - 2u/3 + O(u²)
    let u_min = 1e-4f64.min(eps_max);
    let steps = 20_000;
    let (mut best_u, mut best) = (eps_max, ratio(eps_max));
    for i in 0..=steps {
        let u = u_min + (eps_max - u_min) * i as f64 / steps as f64;
        let r = ratio(u);
        if r < best {
            best = r;
            best_u = u;
        }
    }
    // golden-section refinement around the grid minimum
    let width = (eps_max - u_min) / steps as f64;
    let (mut lo, mut hi) = ((best_u - width).max(u_min), (best_u + width).min(eps_max));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if ratio(x1) < ratio(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let kappa = best.min(ratio(0.5 * (lo + hi)));
    Ok((kappa, eps_max))
}

/// The concentration bound `e^{-κ σ² (1-p) n}` with the exact probability it bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cor53 {
    pub bound: f64,
    /// `P(1 - Y/n <= p - σ(1-p))` for `Y ~ Bin(n, 1-p)`.
    pub exact: f64,
}

pub fn cor53_bound(n: u64, p: f64, sigma: f64, kappa: f64, eps: f64) -> Result<Cor53> {
    check_p(p)?;
    let cap = if p >= 1.0 {
        eps
    } else {
        (p / (1.0 - p)).min(eps)
    };
    if !(sigma > 0.0 && sigma < cap) {
        return invalid(format!(
            "σ = {sigma} must lie in (0, min(p/(1-p), ε) = {cap})"
        ));
    }
    let bound = (-kappa * sigma * sigma * (1.0 - p) * n as f64).exp();
    // 1 - Y/n <= p - σ(1-p)  ⇔  Y >= n(1-p)(1+σ)
    let x = n as f64 * (1.0 - p) * (1.0 + sigma);
    let exact = binomial_upper_tail(n, 1.0 - p, ceil_tolerant(x));
    Ok(Cor53 { bound, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exhaustive probability over all labeled graphs on n vertices.
    fn brute_force(n: usize, p: f64) -> f64 {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .collect();
        let mut total = 0.0;
        for mask in 0u64..(1 << pairs.len()) {
            let mut uf = UnionFind::new(n);
            let mut present = 0;
            for (i, &(x, y)) in pairs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    uf.union(x, y);
                    present += 1;
                }
            }
            if uf.component_count() == 1 {
                total += p.powi(present) * (1.0 - p).powi(pairs.len() as i32 - present);
            }
        }
        total
    }

    #[test]
    fn small_cases() {
        assert_eq!(exact_connectivity(1, 0.3).unwrap(), 1.0);
        assert_relative_eq!(exact_connectivity(2, 0.3).unwrap(), 0.3, epsilon = 1e-15);
        assert_relative_eq!(exact_connectivity(3, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        assert!(exact_connectivity(0, 0.5).is_err());
        assert!(exact_connectivity(401, 0.5).is_err());
    }

    #[test]
    fn recursion_matches_enumeration() {
        for n in 1..=5 {
            for p in [0.2, 0.5, 0.8] {
                let e = exact_connectivity(n, p).unwrap();
                assert!(
                    (e - brute_force(n as usize, p)).abs() < 1e-12,
                    "n={n} p={p}"
                );
                let d = exact_disconnectivity(n, p).unwrap();
                assert!((e + d - 1.0).abs() < 1e-12 || n == 1);
            }
        }
    }

    #[test]
    fn connectivity_monotone_in_p() {
        for n in [5, 30, 120] {
            let mut prev = 0.0;
            for i in 0..=50 {
                let v = exact_connectivity(n, i as f64 / 50.0).unwrap();
                assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn monte_carlo_edge_cases() {
        assert_eq!(mc_connectivity(6, 1.0, 50, 3, 1).unwrap().estimate, 1.0);
        assert_eq!(mc_connectivity(6, 0.0, 50, 3, 1).unwrap().estimate, 0.0);
        let a = mc_connectivity(10, 0.5, 500, 9, 1).unwrap();
        let b = mc_connectivity(10, 0.5, 500, 9, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_interval_shrinks() {
        let small = mc_connectivity(8, 0.4, 1_000, 1, 0).unwrap();
        let large = mc_connectivity(8, 0.4, 16_000, 1, 0).unwrap();
        let ratio = small.half_width() / large.half_width();
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    }

    #[test]
    fn durrett_small_n_is_clamped() {
        let d = durrett_lower_bound(10.0, 1.5).unwrap();
        assert!(d.raw < 0.0);
        assert!(d.clamped);
        assert_eq!(d.value, 0.0);
        assert!(durrett_lower_bound(10.0, 1.0).is_err());
    }

    #[test]
    fn durrett_tends_to_one() {
        let mut prev = 0.0;
        for e in [40.0, 60.0, 80.0, 120.0, 200.0] {
            let d = durrett_lower_bound(f64::exp(e), 2.0).unwrap();
            assert!(d.raw >= prev);
            prev = d.raw;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn durrett_below_exact_when_positive() {
        for a in [1.5, 2.0, 3.0] {
            for n in 10..=400u64 {
                let d = durrett_lower_bound(n as f64, a).unwrap();
                if d.raw > 0.0 {
                    let (p, _) = log_scaled_p(n, a);
                    assert!(d.value <= exact_connectivity(n, p).unwrap());
                }
            }
        }
    }

    #[test]
    fn nonconnectivity_terms() {
        let lo = nonconnectivity_upper_bound(100.0, 1.5, 1.0, 1.0, false).unwrap();
        let hi = nonconnectivity_upper_bound(100.0, 3.0, 1.0, 1.0, false).unwrap();
        assert!(hi < lo);
        let n_star = (2..200)
            .map(|e| f64::exp(e as f64))
            .find(|&n| nonconnectivity_upper_bound(n, 2.0, 1.0, 1.0, true).unwrap() < 1.0);
        assert!(n_star.is_some());
        let (m, l) = fit_nonconnectivity_constants(2.0, 50, 400, false).unwrap();
        assert!(m.is_finite() && l > 0.0);
    }

    #[test]
    fn h_values() {
        assert_eq!(h(1.0), 0.0);
        assert_relative_eq!(h(std::f64::consts::E), (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(h(2.0), 0.193_147_180_56, epsilon = 1e-10);
    }

    #[test]
    fn tail_bound_example() {
        let b = binomial_tail_bound(10, 0.2, 4.0, 2.0).unwrap();
        assert_relative_eq!(b, (-0.193_147_180_56f64 * 4.0).exp(), epsilon = 1e-10);
        assert!((b - 0.4618).abs() < 1e-4);
        let e = exact_binomial_tail(10, 0.2, 4.0).unwrap();
        assert!((e - 0.1209).abs() < 1e-4 && e <= b);
        assert!(binomial_tail_bound(10, 0.2, 3.0, 2.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        let (k, e) = chernoff_kappa(0.5).unwrap();
        assert_eq!(e, 0.5);
        assert_relative_eq!(k, h(1.5) / 0.25, epsilon = 1e-9);
        assert!((k - 0.2885).abs() < 1e-3);
        let (k1, _) = chernoff_kappa(1.0).unwrap();
        assert_relative_eq!(k1, h(2.0), epsilon = 1e-9);
        let u = 1e-3;
        assert!((h(1.0 + u) / (u * u) - 0.5).abs() < 1e-3);
        for i in 1..=100_000 {
            let u = 0.5 * i as f64 / 100_000.0;
            assert!(h(1.0 + u) >= k * u * u - 1e-12);
        }
    }

    #[test]
    fn cor53_examples() {
        let (kappa, eps) = chernoff_kappa(1.0).unwrap();
        let tiny = cor53_bound(100, 0.5, 1e-9, kappa, eps).unwrap();
        assert!(tiny.bound > 1.0 - 1e-12);
        assert!(cor53_bound(100, 0.5, 1.5, kappa, eps).is_err());
        let a = cor53_bound(100, 0.5, 0.1, kappa, eps).unwrap();
        let b = cor53_bound(1000, 0.5, 0.1, kappa, eps).unwrap();
        assert!(b.bound < a.bound);
        assert!(a.exact <= a.bound && b.exact <= b.bound);
    }
}
