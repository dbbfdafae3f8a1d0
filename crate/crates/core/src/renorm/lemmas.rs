//! Closed-form probabilities behind the cascade: annulus connection events of
//! the b = 0 profile, the skip-over bound, pre-percolation scans, the γ-good
//! recursion and the subcritical comparison quantities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, regime, Error, Result};
use crate::hierarchy::checked_power;
use crate::numerics::{
    binomial_upper_tail, ln_no_edge, prob_any_edge, series_verdict, CompensatedSum,
    SeriesDiagnostics,
};
use crate::profiles::{scale_index, ConnectionProfile, Rates, ScaledLog};
use crate::rng::{stream, tag};

/// `r_n(β) = β² a ln n / N^{(2K-b) ln n}`.
pub fn r_n(beta: f64, a: f64, k_scale: f64, b: f64, base: u32, n: u64) -> Result<f64> {
    if !(b > 0.0 && b < 2.0 * k_scale) {
        return regime(format!("0 < b < 2K fails: b = {b}, K = {k_scale}"));
    }
    if !(0.0..1.0).contains(&beta) {
        return invalid(format!("β must lie in [0, 1), got {beta}"));
    }
    if n < 2 || base < 2 {
        return invalid("r_n needs n >= 2 and N >= 2");
    }
    let ln_n = (n as f64).ln();
    let ln_base = (base as f64).ln();
    Ok(beta * beta * a * ln_n * (-(2.0 * k_scale - b) * ln_n * ln_base).exp())
}

/// Parameters of the b = 0 profile `c_{k_n} = C + aN ln n` with `δ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma51Params {
    pub base: u32,
    pub k_scale: f64,
    pub c: f64,
    pub a: f64,
}

impl Lemma51Params {
    pub fn new(base: u32, k_scale: f64, c: f64, a: f64) -> Result<Self> {
        let p = Lemma51Params {
            base,
            k_scale,
            c,
            a,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return invalid(format!("N must be at least 2, got {}", self.base));
        }
        if !(self.a >= 0.0 && self.c >= 0.0) {
            return invalid("a and C must be nonnegative");
        }
        let ln_base = (self.base as f64).ln();
        if !(self.k_scale * ln_base > 1.0) {
            return regime(format!(
                "K ln N > 1 fails: K ln N = {:.6} (take K = 1 with N >= 3, or K > 1/ln 2 with N = 2)",
                self.k_scale * ln_base
            ));
        }
        Ok(())
    }

    /// The connection profile, or `None` when `a = 0` (constant `C`).
    pub fn profile(&self) -> Result<Option<ConnectionProfile>> {
        if self.a == 0.0 {
            return Ok(None);
        }
        let s = ScaledLog::new(self.k_scale, self.c, self.a * self.base as f64, 0.0)?;
        ConnectionProfile::new(self.base, 1.0, Rates::ScaledLog(s)).map(Some)
    }

    fn ln_base(&self) -> f64 {
        (self.base as f64).ln()
    }

    fn k(&self, n: u64) -> u64 {
        scale_index(self.k_scale, n)
    }
}

struct Evaluator {
    params: Lemma51Params,
    profile: Option<ConnectionProfile>,
}

impl Evaluator {
    fn new(params: &Lemma51Params) -> Result<Self> {
        params.validate()?;
        Ok(Evaluator {
            params: *params,
            profile: params.profile()?,
        })
    }

    fn ln_p(&self, m: u64) -> Result<f64> {
        match &self.profile {
            Some(p) => p.ln_connection_probability(m),
            None if self.params.c > 0.0 => {
                Ok((self.params.c.ln() - 2.0 * m as f64 * self.params.ln_base()).min(0.0))
            }
            None => Ok(f64::NEG_INFINITY),
        }
    }

    /// `ln` of the number of pairs between a set of `e^{ln_size}` points in a
    /// ball of level below `m` and the points at distance exactly `m`.
    fn ln_shell(&self, ln_size: f64, m: u64) -> f64 {
        let ln_base = self.params.ln_base();
        ln_size + (m - 1) as f64 * ln_base + (self.params.base as f64 - 1.0).ln()
    }

    /// `ln P(no edge from the set to any distance in lo+1..=hi)`.
    fn ln_no_edge_range(&self, ln_size: f64, lo: u64, hi: u64) -> Result<f64> {
        let mut s = CompensatedSum::new();
        for m in lo + 1..=hi {
            s.add(ln_no_edge(self.ln_p(m)?, self.ln_shell(ln_size, m)));
        }
        Ok(s.value())
    }

    /// As above with `hi = ∞`, truncated once terms are negligible.
    fn ln_no_edge_beyond(&self, ln_size: f64, lo: u64) -> Result<f64> {
        let mut s = CompensatedSum::new();
        for m in lo + 1..lo + 10_000 {
            let t = ln_no_edge(self.ln_p(m)?, self.ln_shell(ln_size, m));
            s.add(t);
            if t == f64::NEG_INFINITY {
                break;
            }
            if m > lo + 8 && t.abs() < 1e-18 * s.value().abs().max(1e-300) {
                break;
            }
        }
        Ok(s.value())
    }
}

/// The events of the annulus lemma for the b = 0 profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Lemma51Case {
    /// `B_{k_n}` connects to the `(k_{n+1}+j-1, k_{n+1}+j]`-annulus.
    A { j: u64 },
    /// `B_{k_{n+1}}` has no edge to the `(k_{n+1}+j-1, k_{n+1}+j]`-annulus.
    B { j: u64 },
    /// No edge from `B_{k_{n+1}}` to the `(k_{n+1}, k_{n+2}]`-annulus.
    C,
    /// `B_{k_n}` connects to the `(k_{n+ℓ}+j-1, k_{n+ℓ}+j]`-annulus.
    D { j: u64, l: u64 },
    /// `B_{k_n}` connects to the complement of `B_{k_{n+1}}`.
    E,
    /// Partial sums over `m = 2..=n` of case E.
    F,
}

/// An exact finite-n probability next to its large-n asymptotic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactVsAsymptotic {
    pub n: u64,
    pub exact: f64,
    pub asymptotic: f64,
}

/// Exact probability of the chosen event and the asymptotic expression, with
/// `K ln N` in place of `ln N` where the scale enters.
pub fn lemma51(params: &Lemma51Params, case: Lemma51Case, n: u64) -> Result<ExactVsAsymptotic> {
    if n < 2 {
        return invalid("the annulus lemma needs n >= 2");
    }
    let ev = Evaluator::new(params)?;
    let p = params;
    let ln_base = p.ln_base();
    let nf = n as f64;
    let coef = p.a * p.base as f64 * (1.0 - 1.0 / p.base as f64);
    let (kn, kn1, kn2) = (p.k(n), p.k(n + 1), p.k(n + 2));
    let ln_ball = |k: u64| k as f64 * ln_base;
    let check_j = |j: u64, width: u64| -> Result<()> {
        if j == 0 || j > width {
            return invalid(format!("j = {j} must lie in 1..={width}"));
        }
        Ok(())
    };
    let (exact, asymptotic) = match case {
        Lemma51Case::A { j } => {
            check_j(j, kn2 - kn1)?;
            let m = kn1 + j;
            let exact = prob_any_edge(ev.ln_p(m)?, ev.ln_shell(ln_ball(kn), m));
            let asym =
                coef * nf.ln() * (-(j as f64) * ln_base - p.k_scale * nf.ln() * ln_base).exp();
            (exact, asym)
        }
        Lemma51Case::B { j } => {
            check_j(j, kn2 - kn1)?;
            let m = kn1 + j;
            let exact = ln_no_edge(ev.ln_p(m)?, ev.ln_shell(ln_ball(kn1), m)).exp();
            (exact, nf.powf(-coef * (-(j as f64) * ln_base).exp()))
        }
        Lemma51Case::C => {
            let exact = ev.ln_no_edge_range(ln_ball(kn1), kn1, kn2)?.exp();
            (exact, nf.powf(-p.a))
        }
        Lemma51Case::D { j, l } => {
            if l == 0 {
                return invalid("ℓ must be at least 1");
            }
            let (lo, hi) = (p.k(n + l), p.k(n + l + 1));
            check_j(j, hi - lo)?;
            let m = lo + j;
            let exact = prob_any_edge(ev.ln_p(m)?, ev.ln_shell(ln_ball(kn), m));
            let nl = (n + l) as f64;
            let asym = coef
                * nl.ln()
                * (-(j as f64) * ln_base - l as f64 * p.k_scale * ln_base * nl.ln()).exp();
            (exact, asym)
        }
        Lemma51Case::E => {
            let exact = -ev.ln_no_edge_beyond(ln_ball(kn), kn1)?.exp_m1();
            (exact, case_e_asymptotic(p, n))
        }
        Lemma51Case::F => {
            let (mut exact, mut asym) = (CompensatedSum::new(), CompensatedSum::new());
            for m in 2..=n {
                let km = p.k(m);
                let km1 = p.k(m + 1);
                exact.add(-ev.ln_no_edge_beyond(ln_ball(km), km1)?.exp_m1());
                asym.add(case_e_asymptotic(p, m));
            }
            (exact.value(), asym.value())
        }
    };
    Ok(ExactVsAsymptotic {
        n,
        exact,
        asymptotic,
    })
}

/// `a Σ_{ℓ>=1} ln(n+ℓ) / (n+ℓ)^{ℓ K ln N}`.
fn case_e_asymptotic(p: &Lemma51Params, n: u64) -> f64 {
    let g = p.k_scale * p.ln_base();
    let mut s = CompensatedSum::new();
    for l in 1..10_000u64 {
        let x = (n + l) as f64;
        let t = (x.ln().ln() - l as f64 * g * x.ln()).exp();
        s.add(t);
        if t < 1e-18 * s.value() {
            break;
        }
    }
    p.a * s.value()
}

/// Parameters of the general scaled-log profile with `δ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipParams {
    pub base: u32,
    pub k_scale: f64,
    pub b: f64,
    pub a: f64,
    pub c: f64,
}

impl SkipParams {
    fn profile(&self) -> Result<ConnectionProfile> {
        let ln_base = (self.base as f64).ln();
        if !(self.b > 0.0 && self.b < 2.0 * self.k_scale - 1.0 / ln_base) {
            return regime(format!(
                "0 < b < 2K - 1/ln N fails: b = {}, 2K - 1/ln N = {:.6}",
                self.b,
                2.0 * self.k_scale - 1.0 / ln_base
            ));
        }
        let s = ScaledLog::new(self.k_scale, self.c, self.a, self.b)?;
        ConnectionProfile::new(self.base, 1.0, Rates::ScaledLog(s))
    }
}

fn skip_exact_ln_size(
    profile: &ConnectionProfile,
    k_scale: f64,
    n: u64,
    j: u64,
    ln_size: f64,
) -> Result<f64> {
    let (lo, hi) = (scale_index(k_scale, n + j), scale_index(k_scale, n + j + 1));
    let ln_base = (profile.base as f64).ln();
    let ln_dim = (profile.base as f64 - 1.0).ln();
    let mut s = CompensatedSum::new();
    for m in lo + 1..=hi {
        let ln_p = profile.ln_connection_probability(m)?;
        s.add(ln_no_edge(
            ln_p,
            ln_size + (m - 1) as f64 * ln_base + ln_dim,
        ));
    }
    Ok(-s.value().exp_m1())
}

fn skip_rate(p: &SkipParams, n: u64, j: u64) -> f64 {
    let ln_n = (n as f64).ln();
    ln_n * (-(p.k_scale * j as f64 - p.b) * (p.base as f64).ln() * ln_n).exp()
}

/// Probability that a cluster of `cluster_size` points in `B_{k_n}` connects
/// to the `(k_{n+j}, k_{n+j+1}]`-annulus, and the bound `M ln n / n^{(Kj-b) ln N}`.
pub fn skip_annulus_bound(
    params: &SkipParams,
    n: u64,
    j: u64,
    cluster_size: f64,
    m: f64,
) -> Result<ExactVsAsymptotic> {
    if j < 2 {
        return invalid(format!("the skip-over event needs j >= 2, got {j}"));
    }
    if n < 2 {
        return invalid("the skip-over event needs n >= 2");
    }
    if !(cluster_size >= 0.0 && cluster_size.is_finite()) {
        return invalid("cluster size must be finite and nonnegative");
    }
    let profile = params.profile()?;
    let exact = if cluster_size == 0.0 {
        0.0
    } else {
        skip_exact_ln_size(&profile, params.k_scale, n, j, cluster_size.ln())?
    };
    Ok(ExactVsAsymptotic {
        n,
        exact,
        asymptotic: m * skip_rate(params, n, j),
    })
}

/// As [`skip_annulus_bound`] for a cluster filling the whole `k_n`-ball,
/// whose size may exceed the range of `f64`.
pub fn skip_annulus_full_ball(
    params: &SkipParams,
    n: u64,
    j: u64,
    m: f64,
) -> Result<ExactVsAsymptotic> {
    if j < 2 || n < 2 {
        return invalid("the skip-over event needs j >= 2 and n >= 2");
    }
    let profile = params.profile()?;
    let ln_size = scale_index(params.k_scale, n) as f64 * (params.base as f64).ln();
    let exact = skip_exact_ln_size(&profile, params.k_scale, n, j, ln_size)?;
    Ok(ExactVsAsymptotic {
        n,
        exact,
        asymptotic: m * skip_rate(params, n, j),
    })
}

/// Worst case over clusters filling the whole `k_n`-ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkipSweep {
    pub j: u64,
    pub m: f64,
    /// Smallest `n*` with exact <= bound for every `n` in `n*..=n_hi`.
    pub n_star: Option<u64>,
    /// `max exact / (ln n / n^{(Kj-b) ln N})` over the range: the smallest
    /// `M` that works on the whole range.
    pub empirical_m: f64,
}

pub fn skip_annulus_sweep(
    params: &SkipParams,
    j: u64,
    n_lo: u64,
    n_hi: u64,
    m: f64,
) -> Result<SkipSweep> {
    if j < 2 || n_lo < 2 || n_hi < n_lo {
        return invalid("the sweep needs j >= 2 and 2 <= n_lo <= n_hi");
    }
    let profile = params.profile()?;
    let ln_base = (params.base as f64).ln();
    let mut n_star = None;
    let mut empirical_m = 0.0f64;
    for n in n_lo..=n_hi {
        let ln_size = scale_index(params.k_scale, n) as f64 * ln_base;
        let exact = skip_exact_ln_size(&profile, params.k_scale, n, j, ln_size)?;
        let rate = skip_rate(params, n, j);
        empirical_m = empirical_m.max(exact / rate);
        if exact <= m * rate {
            n_star.get_or_insert(n);
        } else {
            n_star = None;
        }
    }
    Ok(SkipSweep {
        j,
        m,
        n_star,
        empirical_m,
    })
}

/// Partial sums over `n = 2..=n_max` of `Σ_{j=2}^{j_max} M ln n / n^{(Kj-b) ln N}`.
pub fn skip_double_sum(params: &SkipParams, n_max: u64, j_max: u64, m: f64) -> Result<Vec<f64>> {
    params.profile()?;
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(n_max.saturating_sub(1) as usize);
    for n in 2..=n_max {
        for j in 2..=j_max {
            acc.add(m * skip_rate(params, n, j));
        }
        out.push(acc.value());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PrePercMode {
    Exact,
    /// Bernoulli draws of the disconnection indicator from the exact probabilities.
    Sampled {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrePercRow {
    pub n: u64,
    /// `P(A_n)`: no edge between the `(k_n, k_{n+1}]` and `(k_{n+1}, k_{n+2}]` annuli.
    pub p_disconnect: f64,
    pub partial_sum: f64,
    /// Partial sum of `n^{-a}` for comparison.
    pub reference_sum: f64,
    /// Sampled occurrence of `A_n`.
    pub disconnected: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrePercScan {
    pub rows: Vec<PrePercRow>,
    /// Summability heuristic for `Σ P(A_n)` at tolerance `1e-6`.
    pub diagnostics: SeriesDiagnostics,
    /// Number of sampled disconnections.
    pub failures: Option<u64>,
    /// Last `n` with a sampled disconnection.
    pub last_failure: Option<u64>,
}

/// Cauchy tolerance of the pre-percolation scan.
pub const PREPERC_TOL: f64 = 1e-6;

/// Disconnection probabilities of successive annuli for `n_lo..=n_hi`.
///
/// The event is an intersection of independent no-edge events, so its
/// probability is closed-form and its indicator can be drawn directly.
pub fn pre_percolation_scan(
    params: &Lemma51Params,
    n_lo: u64,
    n_hi: u64,
    mode: PrePercMode,
) -> Result<PrePercScan> {
    if n_lo < 2 || n_hi < n_lo {
        return invalid("the scan needs 2 <= n_lo <= n_hi");
    }
    let ev = Evaluator::new(params)?;
    let ln_base = params.ln_base();
    let (mut sum, mut reference) = (CompensatedSum::new(), CompensatedSum::new());
    let mut rows = Vec::with_capacity((n_hi - n_lo + 1) as usize);
    let (mut failures, mut last_failure) = (0u64, None);
    for n in n_lo..=n_hi {
        let (k1, k2) = (params.k(n + 1), params.k(n + 2));
        let p = ev
            .ln_no_edge_range(k1 as f64 * ln_base, k1, k2)?
            .exp()
            .clamp(0.0, 1.0);
        sum.add(p);
        reference.add((n as f64).powf(-params.a));
        let disconnected = match mode {
            PrePercMode::Exact => None,
            PrePercMode::Sampled { seed } => {
                let hit = stream(seed, &[n, tag::INDICATOR]).random::<f64>() < p;
                if hit {
                    failures += 1;
                    last_failure = Some(n);
                }
                Some(hit)
            }
        };
        rows.push(PrePercRow {
            n,
            p_disconnect: p,
            partial_sum: sum.value(),
            reference_sum: reference.value(),
            disconnected,
        });
    }
    let terms: Vec<f64> = rows.iter().map(|r| r.p_disconnect).collect();
    let sampled = matches!(mode, PrePercMode::Sampled { .. });
    Ok(PrePercScan {
        rows,
        diagnostics: series_verdict(&terms, PREPERC_TOL),
        failures: sampled.then_some(failures),
        last_failure,
    })
}

/// One step of the γ-good recursion
/// `p_{n+1} >= Bin(N^Δ, p_n, >= N^{γΔ}) (1 - ε_n)`, `Δ = k_{n+1} - k_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaStep {
    pub n: u64,
    pub k_n: u64,
    pub k_next: u64,
    pub trials: u64,
    pub threshold: u64,
    pub p_n: f64,
    /// `Bin(N^Δ, p_n, >= N^{γΔ})`.
    pub binomial_tail: f64,
    /// `1 - (1 - exp(-c N^{2γk_n - (1+δ)k_{n+1}}))^{N^{γΔ}}`.
    pub eps_n: f64,
    pub p_next: f64,
    pub above_eta: bool,
}

/// Iterates the γ-good lower bound from `p_start` at `n_start` with
/// `k_n = ⌊n ln n⌋`. The constants `η` and the starting point are the
/// caller's; only their inequality relations are fixed by the argument.
#[allow(clippy::too_many_arguments)]
pub fn gamma_recursion(
    base: u32,
    delta: f64,
    c: f64,
    gamma: f64,
    n_start: u64,
    p_start: f64,
    steps: u64,
    eta: f64,
) -> Result<Vec<GammaStep>> {
    if !((1.0 + delta) / 2.0 < gamma && gamma < 1.0) {
        return regime(format!("(1+δ)/2 < γ < 1 fails: δ = {delta}, γ = {gamma}"));
    }
    if !(c > 0.0) || !(0.0..=1.0).contains(&p_start) || n_start < 2 {
        return invalid("the γ recursion needs c > 0, p in [0, 1] and n >= 2");
    }
    let ln_base = (base as f64).ln();
    let mut out = Vec::with_capacity(steps as usize);
    let mut p_n = p_start;
    for n in n_start..n_start + steps {
        let (k_n, k_next) = (scale_index(1.0, n), scale_index(1.0, n + 1));
        let width = (k_next - k_n) as u32;
        let trials = checked_power(base, width)?;
        if trials > 1 << 32 {
            return Err(Error::InfeasibleScale(format!(
                "N^Δ = {trials} trials at n = {n} exceed 2^32"
            )));
        }
        let ln_threshold = gamma * width as f64 * ln_base;
        let threshold = (ln_threshold.exp() * (1.0 - 1e-12)).ceil() as u64;
        let binomial_tail = binomial_upper_tail(trials, p_n, threshold);
        let x = (2.0 * gamma * k_n as f64 - (1.0 + delta) * k_next as f64) * ln_base;
        let inner = -(c.ln() + x).exp();
        let ln_keep = ln_threshold.exp() * (-inner.exp()).ln_1p();
        let eps_n = -ln_keep.exp_m1();
        let p_next = binomial_tail * (1.0 - eps_n);
        out.push(GammaStep {
            n,
            k_n,
            k_next,
            trials,
            threshold,
            p_n,
            binomial_tail,
            eps_n,
            p_next,
            above_eta: p_next > eta,
        });
        p_n = p_next;
    }
    Ok(out)
}

/// `r̃_n = a ln n / N^{(K - 2/ln N) ln n} · N^{-K ln n}`, with the first
/// factor (the expected degree scale) reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RTilde {
    pub n: u64,
    pub degree_scale: f64,
    pub value: f64,
}

pub fn r_tilde(a: f64, k_scale: f64, base: u32, n: u64) -> Result<RTilde> {
    if n < 2 || base < 2 || !(a > 0.0) {
        return invalid("r̃_n needs n >= 2, N >= 2 and a > 0");
    }
    let ln_base = (base as f64).ln();
    if !(k_scale > 2.0 / ln_base) {
        return regime(format!(
            "2/ln N < K fails: 2/ln N = {:.6}, K = {k_scale}",
            2.0 / ln_base
        ));
    }
    let ln_n = (n as f64).ln();
    let degree_scale = a * ln_n * (-(k_scale - 2.0 / ln_base) * ln_n * ln_base).exp();
    let value = degree_scale * (-k_scale * ln_n * ln_base).exp();
    Ok(RTilde {
        n,
        degree_scale,
        value,
    })
}

/// `α(λ) = λ - 1 - ln λ`.
pub fn alpha(lambda: f64) -> f64 {
    lambda - 1.0 - lambda.ln()
}

/// Largest-component tail of a subcritical `G(𝒩, λ/𝒩)`:
/// `P(|C| >= (1+ε) ln 𝒩 / α(λ)) <= 𝒩^{-(1+ε)} / λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentTail {
    pub alpha: f64,
    pub size_threshold: f64,
    pub bound: f64,
}

pub fn largest_component_tail(ln_nodes: f64, lambda: f64, eps: f64) -> Result<ComponentTail> {
    if !(lambda > 0.0 && lambda < 1.0) || !(eps > 0.0) || !(ln_nodes > 0.0) {
        return invalid("the component tail needs 0 < λ < 1, ε > 0 and 𝒩 > 1");
    }
    let al = alpha(lambda);
    Ok(ComponentTail {
        alpha: al,
        size_threshold: (1.0 + eps) * ln_nodes / al,
        bound: (-(1.0 + eps) * ln_nodes).exp() / lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn r_n_example() {
        let v = r_n(0.2, 30.0, 1.0, 1.5, 8, 10).unwrap();
        let ln10 = 10f64.ln();
        assert_relative_eq!(
            v,
            0.04 * 30.0 * ln10 / 8f64.powf(0.5 * ln10),
            epsilon = 1e-12
        );
        assert!((v - 0.252).abs() < 1e-3);
        assert_eq!(r_n(0.0, 30.0, 1.0, 1.5, 8, 10).unwrap(), 0.0);
        assert!(r_n(0.2, 30.0, 1.0, 2.5, 8, 10).is_err());
    }

    #[test]
    fn case_a_zero_rate() {
        let p = Lemma51Params::new(3, 1.0, 0.0, 0.0).unwrap();
        let r = lemma51(&p, Lemma51Case::A { j: 1 }, 10).unwrap();
        assert_eq!(r.exact, 0.0);
        assert_eq!(r.asymptotic, 0.0);
    }

    #[test]
    fn case_c_tends_to_n_pow_minus_a() {
        let p = Lemma51Params::new(3, 1.0, 0.0, 2.0).unwrap();
        for n in [100u64, 1000, 10_000] {
            let r = lemma51(&p, Lemma51Case::C, n).unwrap();
            assert!((r.exact / r.asymptotic - 1.0).abs() < 0.1, "n={n}");
        }
    }

    #[test]
    fn case_b_product_is_case_c() {
        let p = Lemma51Params::new(3, 1.0, 1.0, 1.5).unwrap();
        let n = 40;
        let width = p.k(n + 2) - p.k(n + 1);
        let prod: f64 = (1..=width)
            .map(|j| lemma51(&p, Lemma51Case::B { j }, n).unwrap().exact)
            .product();
        assert_relative_eq!(
            prod,
            lemma51(&p, Lemma51Case::C, n).unwrap().exact,
            epsilon = 1e-12
        );
    }

    #[test]
    fn case_a_and_d_asymptotics() {
        let p = Lemma51Params::new(3, 1.0, 0.0, 1.0).unwrap();
        let n = 5000;
        let a = lemma51(&p, Lemma51Case::A { j: 2 }, n).unwrap();
        // the asymptotic form drops N^{-(k_{n+1} - k_n - K ln n)}, which
        // stays within [N^{-2}, 1] because k_{n+1} - k_n = K ln n + O(1)
        let ratio = a.exact / a.asymptotic;
        assert!((1.0 / 9.0..=1.0).contains(&ratio), "{a:?}");
        let d = lemma51(&p, Lemma51Case::D { j: 2, l: 1 }, n).unwrap();
        assert_relative_eq!(d.exact, a.exact, epsilon = 1e-15);
        assert!(lemma51(&p, Lemma51Case::A { j: 0 }, n).is_err());
    }

    #[test]
    fn case_e_and_f() {
        let p = Lemma51Params::new(3, 1.0, 0.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for n in [5u64, 10, 20, 40, 80] {
            let e = lemma51(&p, Lemma51Case::E, n).unwrap();
            assert!((0.0..=1.0).contains(&e.exact));
            assert!(e.asymptotic < prev);
            prev = e.asymptotic;
        }
        let f50 = lemma51(&p, Lemma51Case::F, 50).unwrap();
        let f100 = lemma51(&p, Lemma51Case::F, 100).unwrap();
        assert!(f100.asymptotic >= f50.asymptotic && f100.asymptotic.is_finite());
        assert!(f100.exact - f50.exact < f50.exact);
    }

    #[test]
    fn regime_is_checked() {
        assert!(Lemma51Params::new(2, 1.0, 0.0, 1.0).is_err());
        assert!(Lemma51Params::new(2, 1.5, 0.0, 1.0).is_ok());
    }

    #[test]
    fn skip_examples() {
        let sp = SkipParams {
            base: 8,
            k_scale: 1.0,
            b: 1.2,
            a: 2.0,
            c: 1.0,
        };
        let z = skip_annulus_bound(&sp, 5, 2, 0.0, 1.0).unwrap();
        assert_eq!(z.exact, 0.0);
        assert!(skip_annulus_bound(&sp, 5, 1, 10.0, 1.0).is_err());
        let sweep = skip_annulus_sweep(&sp, 2, 3, 300, 50.0).unwrap();
        assert!(sweep.n_star.is_some());
        let tight = skip_annulus_sweep(&sp, 2, 3, 300, sweep.empirical_m).unwrap();
        assert_eq!(tight.n_star, Some(3));
        let sums = skip_double_sum(&sp, 20_000, 30, 1.0).unwrap();
        let last = sums[sums.len() - 1];
        let mid = sums[sums.len() / 10];
        assert!(last.is_finite() && last - mid < 0.05 * last);
        let bad = SkipParams { b: 1.9, ..sp };
        assert!(skip_annulus_bound(&bad, 5, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn preperc_contrast() {
        let strong = Lemma51Params::new(3, 1.0, 0.0, 2.0).unwrap();
        let s = pre_percolation_scan(&strong, 2, 20_000, PrePercMode::Exact).unwrap();
        assert_eq!(
            s.diagnostics.verdict,
            crate::numerics::Verdict::SummableAtHorizon
        );
        assert!(s.rows.iter().all(|r| (0.0..=1.0).contains(&r.p_disconnect)));
        let weak = Lemma51Params::new(3, 1.0, 0.0, 0.5).unwrap();
        let w = pre_percolation_scan(&weak, 2, 20_000, PrePercMode::Exact).unwrap();
        assert_eq!(
            w.diagnostics.verdict,
            crate::numerics::Verdict::NotSummableAtHorizon
        );
        let sampled =
            pre_percolation_scan(&weak, 2, 2_000, PrePercMode::Sampled { seed: 4 }).unwrap();
        assert!(sampled.failures.unwrap() > 10);
        let again =
            pre_percolation_scan(&weak, 2, 2_000, PrePercMode::Sampled { seed: 4 }).unwrap();
        assert_eq!(sampled, again);
    }

    #[test]
    fn gamma_recursion_runs() {
        let steps = gamma_recursion(2, 0.5, 50.0, 0.9, 6, 0.95, 4, 0.5).unwrap();
        assert_eq!(steps.len(), 4);
        for s in &steps {
            assert!((0.0..=1.0).contains(&s.p_next));
            assert!(s.threshold <= s.trials);
        }
        assert!(gamma_recursion(2, 0.5, 50.0, 0.7, 6, 0.95, 4, 0.5).is_err());
    }

    #[test]
    fn subcritical_quantities() {
        assert!(alpha(0.5) > 0.0);
        assert_relative_eq!(alpha(0.5), 0.5 - 1.0 + 2f64.ln(), epsilon = 1e-15);
        let t = largest_component_tail(1000f64.ln(), 0.5, 0.1).unwrap();
        assert_relative_eq!(t.bound, 1000f64.powf(-1.1) / 0.5, epsilon = 1e-15);
        let r = r_tilde(1.0, 2.0, 8, 100).unwrap();
        assert!(r.value < r.degree_scale);
        let later = r_tilde(1.0, 2.0, 8, 10_000).unwrap();
        assert!(later.degree_scale < r.degree_scale);
    }
}
