//! The β-good cascade recursion and the certificate that its inequality chain
//! closes from some finite starting index `n₀`.
//!
//! Starting indices are astronomically large in the interesting regime, so
//! the certificate works with `ln n₀` and bounds every tail sum by its first
//! term plus an integral.

use serde::Serialize;

use crate::erconn::chernoff_kappa;
use crate::error::{invalid, regime, Result};
use crate::numerics::ln_upper_gamma_bound;
use crate::profiles::{a_star, check_cascade_regime, scale_index};

/// State of the cascade at scale `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeState {
    pub n: u64,
    pub k_n: u64,
    pub beta: f64,
    /// `ε_n = n^{-(1+θ)}`.
    pub eps: f64,
    pub theta: f64,
    pub k_scale: f64,
    /// Good-ball probability used for the last advance.
    pub p_good: Option<f64>,
    /// Connectivity probability (estimate or bound) of the renormalized graph.
    pub p_connect: Option<f64>,
}

impl CascadeState {
    pub fn new(n: u64, k_scale: f64, beta: f64, theta: f64) -> Result<Self> {
        if n < 1 {
            return invalid("cascade scales start at n = 1");
        }
        if !(beta > 0.0 && beta < 1.0) {
            return invalid(format!("β must lie in (0, 1), got {beta}"));
        }
        if !(theta > 0.0) {
            return invalid(format!("θ must be positive, got {theta}"));
        }
        Ok(CascadeState {
            n,
            k_n: scale_index(k_scale, n),
            beta,
            eps: eps_n(n as f64, theta),
            theta,
            k_scale,
            p_good: None,
            p_connect: None,
        })
    }
}

fn eps_n(n: f64, theta: f64) -> f64 {
    n.powf(-(1.0 + theta))
}

/// Result of one cascade step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeAdvance {
    pub state: CascadeState,
    /// `β_{n+1} >= 1/5`.
    pub beta_ok: bool,
    /// `p^G_n >= 1/2`.
    pub p_good_ok: bool,
}

/// `β_{n+1} = (1 - ε_n) p^G_n β_n`.
pub fn cascade_advance(state: &CascadeState, p_good: f64) -> Result<CascadeAdvance> {
    if !(0.0..=1.0).contains(&p_good) {
        return invalid(format!("p^G must lie in [0, 1], got {p_good}"));
    }
    let beta = (1.0 - state.eps) * p_good * state.beta;
    let n = state.n + 1;
    let next = CascadeState {
        n,
        k_n: scale_index(state.k_scale, n),
        beta,
        eps: eps_n(n as f64, state.theta),
        p_good: Some(p_good),
        ..*state
    };
    Ok(CascadeAdvance {
        state: next,
        beta_ok: beta >= 0.2,
        p_good_ok: p_good >= 0.5,
    })
}

/// The fixed numbers of the induction's base step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step3Constants {
    /// `(4/5)^{1/3}`, the floor each of the three products must reach.
    pub product_floor: f64,
    /// `(4/5)^{1/3} · 2/3 · 1/2`.
    pub beta_floor: f64,
    pub beta_floor_exceeds_fifth: bool,
    /// `(4/5)^{2/3}`.
    pub p_good_floor: f64,
    pub p_good_floor_at_least_half: bool,
}

pub fn step3_constants() -> Step3Constants {
    let product_floor = 0.8f64.powf(1.0 / 3.0);
    let beta_floor = product_floor * (2.0 / 3.0) * 0.5;
    let p_good_floor = 0.8f64.powf(2.0 / 3.0);
    Step3Constants {
        product_floor,
        beta_floor,
        beta_floor_exceeds_fifth: beta_floor > 0.2,
        p_good_floor,
        p_good_floor_at_least_half: p_good_floor >= 0.5,
    }
}

/// Inputs of the certificate. `m` and `l` are the constants of the
/// non-connectivity bound, which the source only asserts exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step3Config {
    pub k_scale: f64,
    pub b: f64,
    pub base: u32,
    pub a: f64,
    pub theta: f64,
    pub kappa: f64,
    pub m: f64,
    pub l: f64,
    /// Starting index to evaluate in addition to the smallest one found.
    pub n0: Option<f64>,
    /// Number of induction steps checked explicitly.
    pub horizon: u64,
}

impl Step3Config {
    /// Defaults: κ from `chernoff_kappa(1)`, `M = L = 1`, horizon 1000.
    pub fn new(k_scale: f64, b: f64, base: u32, a: f64, theta: f64) -> Result<Self> {
        Ok(Step3Config {
            k_scale,
            b,
            base,
            a,
            theta,
            kappa: chernoff_kappa(1.0)?.0,
            m: 1.0,
            l: 1.0,
            n0: None,
            horizon: 1000,
        })
    }
}

/// Lower bounds on the three infinite products from one starting index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step3Products {
    pub ln_n0: f64,
    /// `∏ (1 - n^{-(1+θ)})`.
    pub eps_product: f64,
    /// `∏ p^B_n`, from `1 - p^B_n <= exp(-(κ/2) n^{K ln N - 2(1+θ)})`.
    pub good_count_product: f64,
    /// `∏ p^A_n`, from the non-connectivity bound on the renormalized graph.
    pub connect_product: f64,
    /// The good-ball count floor `N^{K_1 ln n} < (1-ε_n) N^{K ln n} / 2` holds.
    pub count_floor_ok: bool,
    pub all_met: bool,
}

/// One induction step along the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InductionStep {
    pub offset: u64,
    pub beta: f64,
    pub p_good: f64,
    pub beta_ok: bool,
    pub p_good_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step3Report {
    pub constants: Step3Constants,
    pub a_star: f64,
    pub kappa: f64,
    /// `K ln N - 2(1+θ)`.
    pub step1_exponent: f64,
    /// `K_1 ln N (1 - a / (25 K ln N))`.
    pub step2_exponent: f64,
    /// Smallest starting index (as `ln n₀`) at which all three products
    /// reach the floor, if any below `ln n₀ = 10^6`.
    pub ln_n0: Option<f64>,
    /// The same index as an integer when it fits.
    pub n0: Option<u64>,
    pub products: Option<Step3Products>,
    /// Products at the caller's `n0`, if one was given.
    pub requested: Option<Step3Products>,
    pub induction: Vec<InductionStep>,
    pub induction_ok: bool,
}

struct Bounds {
    ln_base: f64,
    k_scale: f64,
    k1: f64,
    theta: f64,
    kappa: f64,
    m: f64,
    l: f64,
    e1: f64,
    e2: f64,
}

impl Bounds {
    /// `ln` of the Step-1 bound `exp(-(κ/2) n^{e1})` at `ln n`.
    fn ln_step1(&self, ln_n: f64) -> f64 {
        -(self.kappa / 2.0) * (self.e1 * ln_n).exp()
    }

    fn step1(&self, ln_n: f64) -> f64 {
        self.ln_step1(ln_n).exp()
    }

    /// `∫_{n₀}^∞ exp(-c x^e) dx = c^{-1/e} Γ(1/e, c n₀^e) / e`.
    fn ln_step1_integral(&self, ln_n0: f64) -> Option<f64> {
        stretched_exp_integral(self.kappa / 2.0, self.e1, ln_n0)
    }

    /// The three Step-2 terms, each without `M`.
    fn step2_terms(&self, ln_n: f64) -> [f64; 3] {
        let g = self.k1 * self.ln_base;
        [
            (13.0 * ln_n.ln() + self.e2 * ln_n).exp(),
            (-g * ln_n).exp(),
            (-self.l * ln_n.powi(3) * (2.0 * g * ln_n).exp()).exp(),
        ]
    }

    fn step2(&self, ln_n: f64) -> f64 {
        self.m * self.step2_terms(ln_n).iter().sum::<f64>() + self.step1(ln_n)
    }

    fn ln_step2_integral(&self, ln_n0: f64) -> Option<f64> {
        let g = self.k1 * self.ln_base;
        // ∫ (ln x)^13 x^{e2} dx = ρ^{-14} Γ(14, ρ ln n₀) with ρ = -e2 - 1
        let rho = -self.e2 - 1.0;
        if !(rho > 0.0) {
            return None;
        }
        let t1 = ln_upper_gamma_bound(14.0, rho * ln_n0)? - 14.0 * rho.ln();
        let t2 = (1.0 - g) * ln_n0 - (g - 1.0).ln();
        // (ln x)^3 >= 1 beyond e, so the third term is at most exp(-L x^{2g})
        let t3 = stretched_exp_integral(self.l, 2.0 * g, ln_n0)?;
        let terms = [t1, t2, t3].map(|t| t + self.m.ln());
        let s1 = self.ln_step1_integral(ln_n0)?;
        Some(log_sum(&[terms[0], terms[1], terms[2], s1]))
    }

    fn step2_decreasing(&self, ln_n0: f64) -> bool {
        // (ln x)^13 x^{e2} decreases once ln x > 13 / (-e2)
        self.e2 < 0.0 && ln_n0 > 13.0 / -self.e2 && ln_n0 > 1.0
    }

    fn count_floor_ok(&self, ln_n: f64) -> bool {
        // (K - K_1) ln N ln n > ln 2 - ln(1 - ε_n)
        let eps = (-(1.0 + self.theta) * ln_n).exp();
        (self.k_scale - self.k1) * self.ln_base * ln_n > 2f64.ln() - (-eps).ln_1p()
    }

    fn products(&self, ln_n0: f64) -> Step3Products {
        let s = 1.0 + self.theta;
        let floor_defect = (1.25f64).ln() / 3.0;
        // Σ_{n>=n₀} -ln(1 - t_n) <= (t(n₀) + ∫ t) / (1 - t(n₀)) for decreasing t < 1
        let product = |first: f64, ln_integral: Option<f64>| -> f64 {
            match ln_integral {
                Some(li) if first < 1.0 => (-(first + li.exp()) / (1.0 - first)).exp(),
                _ => 0.0,
            }
        };
        let first_eps = (-s * ln_n0).exp();
        let eps_product = product(first_eps, Some((1.0 - s) * ln_n0 - (s - 1.0).ln()));
        let good_count_product = if self.e1 > 0.0 {
            product(self.step1(ln_n0), self.ln_step1_integral(ln_n0))
        } else {
            0.0
        };
        let connect_product = if self.e1 > 0.0 && self.step2_decreasing(ln_n0) {
            product(self.step2(ln_n0), self.ln_step2_integral(ln_n0))
        } else {
            0.0
        };
        let count_floor_ok = self.count_floor_ok(ln_n0);
        let target = (-floor_defect).exp();
        let all_met = count_floor_ok
            && [eps_product, good_count_product, connect_product]
                .iter()
                .all(|&p| p >= target);
        Step3Products {
            ln_n0,
            eps_product,
            good_count_product,
            connect_product,
            count_floor_ok,
            all_met,
        }
    }
}

fn log_sum(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// `ln ∫_{X}^∞ exp(-c x^e) dx` with `X = e^{ln_x}`.
fn stretched_exp_integral(c: f64, e: f64, ln_x: f64) -> Option<f64> {
    if !(c > 0.0 && e > 0.0) {
        return None;
    }
    let arg = c * (e * ln_x).exp();
    Some(ln_upper_gamma_bound(1.0 / e, arg)? - c.ln() / e - e.ln())
}

/// Upper bound on `Σ_{n>=n₀} exp(-(κ/2) n^e)`.
pub fn step1_tail_bound(kappa: f64, exponent: f64, ln_n0: f64) -> Option<f64> {
    let first = (-(kappa / 2.0) * (exponent * ln_n0).exp()).exp();
    stretched_exp_integral(kappa / 2.0, exponent, ln_n0).map(|li| first + li.exp())
}

/// Smallest integer `n₀ >= 2` with `step1_tail_bound(κ, e, ln n₀) < target`.
pub fn smallest_n0_for_step1_tail(kappa: f64, exponent: f64, target: f64) -> Option<u64> {
    let ok =
        |n: u64| step1_tail_bound(kappa, exponent, (n as f64).ln()).is_some_and(|t| t < target);
    if ok(2) {
        return Some(2);
    }
    let mut hi = 4u64;
    while !ok(hi) {
        hi = hi.checked_mul(2)?;
    }
    // invariant: lo fails, hi passes
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Checks the cascade inequality chain: the three products of per-step
/// success probabilities each reach `(4/5)^{1/3}` from some `n₀`, and the
/// induction keeps `β_n >= 1/5` and `p^G_n >= 1/2` along the horizon.
pub fn step3_certificate(cfg: &Step3Config) -> Result<Step3Report> {
    check_cascade_regime(cfg.k_scale, cfg.b, cfg.base)?;
    let a_star = a_star(cfg.k_scale, cfg.b, cfg.base)?;
    if !(cfg.a > a_star) {
        return regime(format!("a > a_* fails: a = {}, a_* = {a_star:.6}", cfg.a));
    }
    let ln_base = (cfg.base as f64).ln();
    let theta_max = cfg.k_scale * ln_base / 2.0 - 1.0;
    if !(cfg.theta > 0.0 && cfg.theta < theta_max) {
        return regime(format!(
            "K ln N > 2(1+θ) fails: K ln N = {:.6}, 2(1+θ) = {:.6} (θ must lie in (0, {theta_max:.6}))",
            cfg.k_scale * ln_base,
            2.0 * (1.0 + cfg.theta)
        ));
    }
    if !(cfg.kappa > 0.0 && cfg.m > 0.0 && cfg.l > 0.0) {
        return invalid("κ, M and L must be positive");
    }
    let k1 = 2.0 * cfg.k_scale - cfg.b;
    let bounds = Bounds {
        ln_base,
        k_scale: cfg.k_scale,
        k1,
        theta: cfg.theta,
        kappa: cfg.kappa,
        m: cfg.m,
        l: cfg.l,
        e1: cfg.k_scale * ln_base - 2.0 * (1.0 + cfg.theta),
        e2: k1 * ln_base * (1.0 - cfg.a / (25.0 * cfg.k_scale * ln_base)),
    };

    let (ln_n0, n0) = search_n0(&bounds);
    let products = ln_n0.map(|l| bounds.products(l));
    let requested = cfg.n0.map(|n| bounds.products(n.ln()));

    let mut induction = Vec::new();
    let mut induction_ok = false;
    if let Some(start) = ln_n0 {
        induction_ok = true;
        let (mut beta, mut p_good) = (0.5f64, 2.0 / 3.0);
        for offset in 0..=cfg.horizon {
            let ln_n = start + (offset as f64 * (-start).exp()).ln_1p();
            let beta_ok = beta >= 0.2;
            let p_good_ok = p_good >= 0.5;
            induction_ok &= beta_ok && p_good_ok;
            induction.push(InductionStep {
                offset,
                beta,
                p_good,
                beta_ok,
                p_good_ok,
            });
            let eps = (-(1.0 + cfg.theta) * ln_n).exp();
            beta *= (1.0 - eps) * p_good;
            p_good = (1.0 - bounds.step1(ln_n)) * (1.0 - bounds.step2(ln_n)).max(0.0);
        }
    }

    Ok(Step3Report {
        constants: step3_constants(),
        a_star,
        kappa: cfg.kappa,
        step1_exponent: bounds.e1,
        step2_exponent: bounds.e2,
        ln_n0,
        n0,
        products,
        requested,
        induction,
        induction_ok,
    })
}

/// Doubling then bisection on `ln n₀`; integer refinement when it fits.
fn search_n0(bounds: &Bounds) -> (Option<f64>, Option<u64>) {
    let ok = |l: f64| bounds.products(l).all_met;
    let mut hi = 2f64.ln();
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return (None, None);
        }
    }
    let mut lo = (hi / 2.0).max(2f64.ln());
    if ok(lo) {
        hi = lo;
        lo = 2f64.ln();
    }
    if ok(lo) {
        return (Some(lo), Some(2));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    if hi < 40.0 {
        let okn = |n: u64| ok((n as f64).ln());
        let (mut a, mut b) = ((lo.exp().floor() as u64).max(2), hi.exp().ceil() as u64 + 1);
        while !okn(b) {
            b += 1;
        }
        if okn(a) {
            return (Some((a as f64).ln()), Some(a));
        }
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if okn(mid) {
                b = mid;
            } else {
                a = mid;
            }
        }
        return (Some((b as f64).ln()), Some(b));
    }
    (Some(hi), None)
}
