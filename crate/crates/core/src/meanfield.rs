//! Mean-field (N → ∞) percolation.
//!
//! Level k keeps the survival probability `β_k` of a Poisson branching process
//! with parameter `λ_k = c_k β_{k-1}²`, i.e. the root of `β = 1 - e^{-λ_k β}`,
//! starting from `β_0 = 1`. The percolation probability is `∏ β_k`, which is
//! positive exactly when `Σ e^{-c_k} < ∞`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{series_verdict, CompensatedSum, SeriesDiagnostics};

/// Default shift in `c_k = a ln(k + shift)`; with `a = 2` it gives
/// `c_1 = 8 ln 2` and `c_2 = 2 ln 17 > 8 ln 2`.
pub const DEFAULT_LOG_SHIFT: f64 = 15.0;

/// Lower end of the bisection bracket.
const BRACKET_LOW: f64 = 1e-12;
const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFieldRates {
    Constant {
        c: f64,
    },
    /// `c_k = a ln(k + shift)`.
    LogK {
        a: f64,
        shift: f64,
    },
    /// `c_k = values[k-1]`.
    Table {
        values: Vec<f64>,
    },
}

impl MeanFieldRates {
    pub fn log_k(a: f64) -> Self {
        MeanFieldRates::LogK {
            a,
            shift: DEFAULT_LOG_SHIFT,
        }
    }

    pub fn c(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return invalid("levels start at k = 1");
        }
        match self {
            MeanFieldRates::Constant { c } => Ok(*c),
            MeanFieldRates::LogK { a, shift } => Ok(a * (k as f64 + shift).ln()),
            MeanFieldRates::Table { values } => values
                .get(k as usize - 1)
                .copied()
                .ok_or_else(|| crate::Error::InvalidInput(format!("no c_k for k={k}"))),
        }
    }

    fn validate(&self, kmax: u64) -> Result<()> {
        match self {
            MeanFieldRates::Constant { c } if !(*c >= 0.0) => invalid("c must be nonnegative"),
            MeanFieldRates::LogK { a, shift } if !(*a >= 0.0) || !(*shift >= 0.0) => {
                invalid("a ln(k + shift) needs a >= 0 and shift >= 0")
            }
            MeanFieldRates::Table { values } if (values.len() as u64) < kmax => invalid(format!(
                "table has {} entries but kmax = {kmax}",
                values.len()
            )),
            _ => Ok(()),
        }
    }
}

/// Survival probability of a Poisson(λ) branching process: the root in (0, 1)
/// of `β = 1 - e^{-λβ}` for `λ > 1`, and 0 otherwise.
pub fn survival_beta(lambda: f64) -> f64 {
    if !(lambda > 1.0) {
        return 0.0;
    }
    let g = |b: f64| -(-lambda * b).exp_m1() - b;
    let (mut lo, mut hi) = (BRACKET_LOW, 1.0);
    if g(lo) <= 0.0 {
        // λ so close to 1 that the root sits below the bracket
        return 0.0;
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The β_k recursion up to `kmax`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSequence {
    pub kmax: u64,
    /// `c_1, ..., c_kmax`.
    pub c: Vec<f64>,
    /// `λ_k = c_k β_{k-1}²`.
    pub lambda: Vec<f64>,
    /// `β_1, ..., β_kmax`.
    pub beta: Vec<f64>,
    /// Partial products `∏_{i≤k} β_i`.
    pub products: Vec<f64>,
    /// Partial sums `Σ_{i≤k} e^{-c_i}`.
    pub exp_sums: Vec<f64>,
    /// First level with `λ_k ≤ 1`, after which every β vanishes.
    pub extinct_at: Option<u64>,
    pub warnings: Vec<String>,
}

pub fn beta_sequence(rates: &MeanFieldRates, kmax: u64) -> Result<MeanFieldSequence> {
    if kmax == 0 {
        return invalid("kmax must be at least 1");
    }
    rates.validate(kmax)?;
    let mut warnings = Vec::new();
    let c1 = rates.c(1)?;
    if c1 <= 2.0 * 2f64.ln() {
        warnings.push(format!("c_1 = {c1:.6} does not exceed 2 ln 2"));
    }
    if kmax >= 2 {
        let c2 = rates.c(2)?;
        if c2 <= 8.0 * 2f64.ln() {
            warnings.push(format!("c_2 = {c2:.6} does not exceed 8 ln 2"));
        }
    }
    let n = kmax as usize;
    let mut seq = MeanFieldSequence {
        kmax,
        c: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        products: Vec::with_capacity(n),
        exp_sums: Vec::with_capacity(n),
        extinct_at: None,
        warnings,
    };
    let (mut prev_beta, mut product) = (1.0f64, 1.0f64);
    let mut exp_sum = CompensatedSum::new();
    for k in 1..=kmax {
        let c = rates.c(k)?;
        let lambda = c * prev_beta * prev_beta;
        let beta = survival_beta(lambda);
        if beta == 0.0 && seq.extinct_at.is_none() {
            seq.extinct_at = Some(k);
        }
        product *= beta;
        exp_sum.add((-c).exp());
        seq.c.push(c);
        seq.lambda.push(lambda);
        seq.beta.push(beta);
        seq.products.push(product);
        seq.exp_sums.push(exp_sum.value());
        prev_beta = beta;
    }
    if let Some(k) = seq.extinct_at {
        seq.warnings
            .push(format!("extinction: λ_{k} ≤ 1, all later β vanish"));
    }
    Ok(seq)
}

/// Truncated `P_perc = ∏ β_k` with convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercolationEstimate {
    pub kmax: u64,
    pub product: f64,
    /// Successive partial products differ by less than `tol` across the last 10% of the horizon.
    pub converged: bool,
    /// Largest successive change over the last 10% of the horizon.
    pub max_late_step: f64,
    /// `P_{kmax-1} - P_{kmax}`.
    pub last_step: f64,
    /// `Σ (1 - β_k)` over the last 10% of the horizon.
    pub late_defect_sum: f64,
    pub extinct_at: Option<u64>,
}

pub fn percolation_probability(
    rates: &MeanFieldRates,
    kmax: u64,
    tol: f64,
) -> Result<PercolationEstimate> {
    let seq = beta_sequence(rates, kmax)?;
    Ok(estimate_from_sequence(&seq, tol))
}

pub fn estimate_from_sequence(seq: &MeanFieldSequence, tol: f64) -> PercolationEstimate {
    let n = seq.products.len();
    let start = n - (n / 10).max(1);
    let step = |i: usize| {
        let before = if i == 0 { 1.0 } else { seq.products[i - 1] };
        before - seq.products[i]
    };
    let max_late_step = (start..n).map(step).fold(0.0, f64::max);
    let late_defect_sum = seq.beta[start..].iter().map(|b| 1.0 - b).sum();
    PercolationEstimate {
        kmax: seq.kmax,
        product: seq.products[n - 1],
        converged: max_late_step < tol,
        max_late_step,
        last_step: step(n - 1),
        late_defect_sum,
        extinct_at: seq.extinct_at,
    }
}

/// Partial sums of `Σ e^{-c_k}` with the heuristic summability verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpSummability {
    pub partial_sums: Vec<f64>,
    pub diagnostics: SeriesDiagnostics,
}

/// Cauchy tolerance used by [`exp_summability`].
pub const SUMMABILITY_TOL: f64 = 1e-9;

/// The verdict is a finite-horizon heuristic: convergence of a series is not
/// decidable from finitely many terms.
pub fn exp_summability(rates: &MeanFieldRates, kmax: u64) -> Result<ExpSummability> {
    if kmax == 0 {
        return invalid("kmax must be at least 1");
    }
    rates.validate(kmax)?;
    let terms: Vec<f64> = (1..=kmax)
        .map(|k| rates.c(k).map(|c| (-c).exp()))
        .collect::<Result<_>>()?;
    let mut acc = CompensatedSum::new();
    let partial_sums = terms
        .iter()
        .map(|&t| {
            acc.add(t);
            acc.value()
        })
        .collect();
    Ok(ExpSummability {
        partial_sums,
        diagnostics: series_verdict(&terms, SUMMABILITY_TOL),
    })
}
