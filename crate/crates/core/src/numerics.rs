//! Log-domain probability helpers, compensated sums, binomial tails, interval
//! estimates and a heuristic verdict for series convergence.

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

/// `-ln(1-p)/p`, continuous at `p = 0` where it equals 1.
pub fn neg_ln1m_ratio(p: f64) -> f64 {
    if p < 1e-8 {
        1.0 + p / 2.0 + p * p / 3.0
    } else {
        -(-p).ln_1p() / p
    }
}

/// `ln((1-p)^M)` for `p = exp(ln_p)` and `M = exp(ln_count)`.
///
/// Stays finite for astronomically large `M` and tiny `p`: the product
/// `M·p` is formed in the log domain.
pub fn ln_no_edge(ln_p: f64, ln_count: f64) -> f64 {
    if ln_count == f64::NEG_INFINITY || ln_p == f64::NEG_INFINITY {
        return 0.0;
    }
    if ln_p >= 0.0 {
        return f64::NEG_INFINITY;
    }
    let p = ln_p.exp();
    -(ln_count + ln_p).exp() * neg_ln1m_ratio(p)
}

/// `1 - (1-p)^M`, the probability that at least one of `M` independent
/// potential edges of probability `p` is present.
pub fn prob_any_edge(ln_p: f64, ln_count: f64) -> f64 {
    -ln_no_edge(ln_p, ln_count).exp_m1()
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `ln(e^a + e^b)`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the Bin(n, q) mass at `k`.
pub fn ln_binomial_pmf(n: u64, q: f64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if q <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, k) + k as f64 * q.ln() + (n - k) as f64 * (-q).ln_1p()
}

/// `P(Y ≥ k_min)` for `Y ~ Bin(n, q)`, summed in the log domain.
///
/// Above the mode the sum starts at `k_min` and walks upward; below it the
/// complementary lower tail is summed downward from `k_min - 1`. Either walk
/// stops once the terms fall below `1e-20` of the running total.
pub fn binomial_upper_tail(n: u64, q: f64, k_min: u64) -> f64 {
    if k_min == 0 {
        return 1.0;
    }
    if k_min > n {
        return 0.0;
    }
    let mode = ((n as f64 + 1.0) * q).floor() as u64;
    if k_min <= mode {
        let mut acc = f64::NEG_INFINITY;
        for k in (0..k_min).rev() {
            let t = ln_binomial_pmf(n, q, k);
            acc = ln_add_exp(acc, t);
            if t < acc - 46.0 {
                break;
            }
        }
        return (1.0 - acc.exp()).max(0.0);
    }
    let mut acc = f64::NEG_INFINITY;
    for k in k_min..=n {
        let t = ln_binomial_pmf(n, q, k);
        acc = ln_add_exp(acc, t);
        if k > mode && t < acc - 46.0 {
            break;
        }
    }
    acc.exp().min(1.0)
}

/// A Monte Carlo proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub std_err: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    /// Wilson interval at `z` standard deviations (1.96 for 95%).
    pub fn wilson(successes: u64, trials: u64, z: f64) -> Self {
        if trials == 0 {
            return Proportion {
                successes,
                trials,
                estimate: 0.0,
                std_err: 0.0,
                lower: 0.0,
                upper: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Proportion {
            successes,
            trials,
            estimate: p,
            std_err: (p * (1.0 - p) / n).sqrt(),
            // the interval touches 0 or 1 exactly at the extremes
            lower: if successes == 0 {
                0.0
            } else {
                (center - half).max(0.0)
            },
            upper: if successes == trials {
                1.0
            } else {
                (center + half).min(1.0)
            },
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }

    /// True if `target` is within `k` binomial standard deviations of the
    /// estimate, the deviation being computed at `target` itself.
    pub fn within_sigma(&self, target: f64, k: f64) -> bool {
        let sd = (target * (1.0 - target) / self.trials as f64).sqrt();
        (self.estimate - target).abs() <= k * sd + 1e-12
    }
}

/// Outcome of the finite-horizon convergence heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SummableAtHorizon,
    NotSummableAtHorizon,
}

/// Diagnostics behind a [`Verdict`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesDiagnostics {
    pub verdict: Verdict,
    /// `S_K - S_{K/10}`, the increment over the last decade of the horizon.
    pub decade_increment: f64,
    /// Power-law decay exponent of the terms fitted across the last decade.
    pub decay_exponent: f64,
    /// Extrapolated remainder `t_K·K/(p-1)`, infinite when `p ≤ 1`.
    pub tail_estimate: f64,
}

/// Power-law exponent above which a series is called summable.
pub const DECAY_MARGIN: f64 = 1.1;

/// Convergence cannot be decided from finitely many terms. The series is
/// called summable at the horizon when either the last-decade increment is
/// below `tol` (Cauchy) or the terms decay faster than `k^{-1.1}` across the
/// last decade.
pub fn series_verdict(terms: &[f64], tol: f64) -> SeriesDiagnostics {
    let k = terms.len();
    if k < 10 {
        let total: f64 = terms.iter().sum();
        let verdict = if total < tol {
            Verdict::SummableAtHorizon
        } else {
            Verdict::NotSummableAtHorizon
        };
        return SeriesDiagnostics {
            verdict,
            decade_increment: total,
            decay_exponent: 0.0,
            tail_estimate: f64::INFINITY,
        };
    }
    let start = k / 10;
    let increment: f64 = terms[start..]
        .iter()
        .copied()
        .collect::<CompensatedSum>()
        .value();
    let (t_start, t_end) = (terms[start - 1], terms[k - 1]);
    let decay = if t_end <= 0.0 {
        f64::INFINITY
    } else if t_start <= 0.0 {
        f64::NEG_INFINITY
    } else {
        (t_start / t_end).ln() / (k as f64 / start as f64).ln()
    };
    let tail = if decay > 1.0 {
        if decay.is_infinite() {
            0.0
        } else {
            t_end * k as f64 / (decay - 1.0)
        }
    } else {
        f64::INFINITY
    };
    let verdict = if increment < tol || decay > DECAY_MARGIN {
        Verdict::SummableAtHorizon
    } else {
        Verdict::NotSummableAtHorizon
    };
    SeriesDiagnostics {
        verdict,
        decade_increment: increment,
        decay_exponent: decay,
        tail_estimate: tail,
    }
}

/// Upper bound on `Γ(s, x)` for `s > 1`, `x > s - 1`:
/// `Γ(s, x) ≤ x^{s-1} e^{-x} · x / (x - (s-1))`, returned as a logarithm.
pub fn ln_upper_gamma_bound(s: f64, x: f64) -> Option<f64> {
    if s <= 1.0 {
        // x^{s-1} is nonincreasing, so Γ(s,x) ≤ x^{s-1} e^{-x}.
        return (x > 0.0).then(|| (s - 1.0) * x.ln() - x);
    }
    if x <= s - 1.0 {
        return None;
    }
    Some((s - 1.0) * x.ln() - x + (x / (x - (s - 1.0))).ln())
}
