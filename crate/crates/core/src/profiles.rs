//! Connection-probability families `p_(k) = min(c_k / N^{k(1+δ)}, 1)` and the
//! logarithmic scale `k_n(K) = ⌊K n ln n⌋`.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, regime, Error, Result};

/// How `c_j` behaves strictly between two scale points `k_n < j < k_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// `c_j = c_{k_n}`.
    #[default]
    Lower,
    /// `c_j = c_{k_{n+1}}`.
    Upper,
    /// Geometric interpolation in `j` between the two scale values.
    Geometric,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(Interpolation::Lower),
            "upper" => Ok(Interpolation::Upper),
            "geometric" => Ok(Interpolation::Geometric),
            other => invalid(format!("unknown interpolation mode '{other}'")),
        }
    }
}

/// The scaled-logarithmic family: `c_{k_n} = C + a·ln n·N^{b ln n}` at the
/// scale points `k_n = ⌊K n ln n⌋`, interpolated in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledLog {
    pub k_scale: f64,
    pub c: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub interpolation: Interpolation,
}

/// The sequence `c_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rates {
    Constant {
        c: f64,
    },
    /// `c_k = C0 + C1 ln k + C2 k^α`.
    LogPoly {
        c0: f64,
        c1: f64,
        c2: f64,
        alpha: f64,
    },
    ScaledLog(ScaledLog),
    /// `c_k = table[k-1]`.
    Table {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionProfile {
    pub base: u32,
    pub delta: f64,
    pub rates: Rates,
}

/// `k_n(K) = ⌊K n ln n⌋`.
pub fn scale_index(k_scale: f64, n: u64) -> u64 {
    if n <= 1 {
        return 0;
    }
    let nf = n as f64;
    (k_scale * nf * nf.ln()).floor() as u64
}

impl ScaledLog {
    pub fn new(k_scale: f64, c: f64, a: f64, b: f64) -> Result<Self> {
        let s = ScaledLog {
            k_scale,
            c,
            a,
            b,
            interpolation: Interpolation::Lower,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_interpolation(mut self, mode: Interpolation) -> Self {
        self.interpolation = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.k_scale > 0.0) {
            return invalid(format!("K must be positive, got {}", self.k_scale));
        }
        if !(self.c >= 0.0) || !(self.a > 0.0) || !(self.b >= 0.0) {
            return invalid(format!(
                "scaled-log needs C >= 0, a > 0, b >= 0 (got C={}, a={}, b={})",
                self.c, self.a, self.b
            ));
        }
        Ok(())
    }

    pub fn scale_point(&self, n: u64) -> u64 {
        scale_index(self.k_scale, n)
    }

    /// `C + a·ln n·N^{b ln n}`.
    pub fn value_at_scale(&self, base: u32, n: u64) -> f64 {
        let ln_n = (n as f64).ln();
        self.c + self.a * ln_n * (self.b * ln_n * (base as f64).ln()).exp()
    }

    /// Largest `n ≥ 2` with `k_n ≤ j`.
    pub fn locate(&self, j: u64) -> Result<u64> {
        let first = self.scale_point(2);
        if j < first {
            return invalid(format!(
                "j={j} lies below the first scale point k_2={first}"
            ));
        }
        let mut hi = 4u64;
        while self.scale_point(hi) <= j {
            hi *= 2;
        }
        let mut lo = 2u64;
        // invariant: k_lo <= j < k_hi
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.scale_point(mid) <= j {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// `c_j` for `j ≥ k_2`.
    pub fn c_at(&self, base: u32, j: u64) -> Result<f64> {
        let n = self.locate(j)?;
        let kn = self.scale_point(n);
        let lower = self.value_at_scale(base, n);
        if j == kn {
            return Ok(lower);
        }
        let upper = self.value_at_scale(base, n + 1);
        Ok(match self.interpolation {
            Interpolation::Lower => lower,
            Interpolation::Upper => upper,
            Interpolation::Geometric => {
                let next = self.scale_point(n + 1);
                let t = (j - kn) as f64 / (next - kn) as f64;
                ((1.0 - t) * lower.ln() + t * upper.ln()).exp()
            }
        })
    }
}

impl Rates {
    pub fn validate(&self) -> Result<()> {
        match self {
            Rates::Constant { c } if !(*c > 0.0) => {
                invalid(format!("constant c must be positive, got {c}"))
            }
            Rates::LogPoly { c0, c1, c2, alpha } => {
                if !(*c0 >= 0.0 && *c1 >= 0.0 && *c2 >= 0.0) {
                    return invalid("log-poly needs C0, C1, C2 >= 0");
                }
                if !(*alpha > 0.0) {
                    return invalid(format!("log-poly needs alpha > 0, got {alpha}"));
                }
                Ok(())
            }
            Rates::ScaledLog(s) => s.validate(),
            Rates::Table { values } => {
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return invalid("table entries must be finite and nonnegative");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl ConnectionProfile {
    pub fn new(base: u32, delta: f64, rates: Rates) -> Result<Self> {
        let p = ConnectionProfile { base, delta, rates };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(base: u32, delta: f64, c: f64) -> Result<Self> {
        Self::new(base, delta, Rates::Constant { c })
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return invalid(format!("N must be at least 2, got {}", self.base));
        }
        if !(self.delta > -1.0) {
            return invalid(format!("delta must exceed -1, got {}", self.delta));
        }
        self.rates.validate()
    }

    /// `c_k` for `k ≥ 1`.
    pub fn c(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return invalid("connection distance must be at least 1");
        }
        Ok(match &self.rates {
            Rates::Constant { c } => *c,
            Rates::LogPoly { c0, c1, c2, alpha } => {
                let kf = k as f64;
                c0 + c1 * kf.ln() + c2 * kf.powf(*alpha)
            }
            Rates::ScaledLog(s) => s.c_at(self.base, k)?,
            Rates::Table { values } => *values
                .get(k as usize - 1)
                .ok_or_else(|| Error::InvalidInput(format!("table has no entry for k={k}")))?,
        })
    }

    /// `ln p_(k)`, never positive; `-∞` when `c_k = 0`.
    pub fn ln_connection_probability(&self, k: u64) -> Result<f64> {
        let c = self.c(k)?;
        if c <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let ln = c.ln() - k as f64 * (1.0 + self.delta) * (self.base as f64).ln();
        Ok(ln.min(0.0))
    }

    /// `p_(k) = min(c_k / N^{k(1+δ)}, 1)`.
    pub fn connection_probability(&self, k: u64) -> Result<f64> {
        Ok(self.ln_connection_probability(k)?.exp())
    }

    /// Same profile with every probability multiplied by the factor implied by `c_k → λ c_k`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let rates = match &self.rates {
            Rates::Constant { c } => Rates::Constant { c: c * factor },
            Rates::LogPoly { c0, c1, c2, alpha } => Rates::LogPoly {
                c0: c0 * factor,
                c1: c1 * factor,
                c2: c2 * factor,
                alpha: *alpha,
            },
            Rates::ScaledLog(s) => Rates::ScaledLog(ScaledLog {
                c: s.c * factor,
                a: s.a * factor,
                ..*s
            }),
            Rates::Table { values } => Rates::Table {
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        ConnectionProfile::new(self.base, self.delta, rates)
    }
}

/// Checks `2/ln N < K < b < 2K - 1/ln N`, naming the first violated inequality.
pub fn check_cascade_regime(k_scale: f64, b: f64, base: u32) -> Result<()> {
    if base < 2 {
        return invalid(format!("N must be at least 2, got {base}"));
    }
    let ln_n = (base as f64).ln();
    if !(2.0 / ln_n < k_scale) {
        return regime(format!(
            "2/ln N < K fails: 2/ln {base} = {:.6} >= K = {k_scale}",
            2.0 / ln_n
        ));
    }
    if !(k_scale < b) {
        return regime(format!("K < b fails: K = {k_scale}, b = {b}"));
    }
    let top = 2.0 * k_scale - 1.0 / ln_n;
    if !(b < top) {
        return regime(format!(
            "b < 2K - 1/ln N fails: b = {b}, 2K - 1/ln N = {top:.6}"
        ));
    }
    Ok(())
}

/// Threshold `a_* = 25 (K ln N + K / (2K - b))` above which the cascade certificate applies.
pub fn a_star(k_scale: f64, b: f64, base: u32) -> Result<f64> {
    check_cascade_regime(k_scale, b, base)?;
    let k1 = 2.0 * k_scale - b;
    Ok(25.0 * (k_scale * (base as f64).ln() + k_scale / k1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn probability_examples() {
        let p = ConnectionProfile::constant(2, 1.0, 4.0).unwrap();
        assert_eq!(p.connection_probability(1).unwrap(), 1.0);
        assert_relative_eq!(p.connection_probability(2).unwrap(), 0.25, epsilon = 1e-15);
        let lp = ConnectionProfile::new(
            2,
            1.0,
            Rates::LogPoly {
                c0: 1.0,
                c1: 0.0,
                c2: 2.0,
                alpha: 2.0,
            },
        )
        .unwrap();
        assert_relative_eq!(lp.c(3).unwrap(), 19.0, epsilon = 1e-12);
        assert_relative_eq!(
            lp.connection_probability(3).unwrap(),
            0.296875,
            epsilon = 1e-14
        );
    }

    #[test]
    fn huge_distances_stay_in_log_domain() {
        let p = ConnectionProfile::constant(16, 1.0, 3.0).unwrap();
        let ln = p.ln_connection_probability(5000).unwrap();
        assert!(ln.is_finite() && ln < -20_000.0);
        assert_eq!(p.connection_probability(5000).unwrap(), 0.0);
    }

    #[test]
    fn invalid_profiles() {
        assert!(ConnectionProfile::constant(1, 1.0, 1.0).is_err());
        assert!(ConnectionProfile::constant(2, -1.0, 1.0).is_err());
        assert!(ConnectionProfile::constant(2, 1.0, 0.0).is_err());
        assert!(ScaledLog::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(ScaledLog::new(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn scale_index_examples() {
        assert_eq!(scale_index(1.0, 1), 0);
        assert_eq!(scale_index(1.0, 2), 1);
        assert_eq!(scale_index(1.0, 3), 3);
        assert_eq!(scale_index(1.0, 10), 23);
    }

    #[test]
    fn scaled_values() {
        let s = ScaledLog::new(1.0, 1.0, 2.0, 1.0).unwrap();
        let k10 = s.scale_point(10);
        let expected = 1.0 + 2.0 * 10f64.ln() * 2f64.powf(10f64.ln());
        assert_relative_eq!(s.c_at(2, k10).unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 23.72, epsilon = 5e-3);

        let s = ScaledLog::new(1.0, 0.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(
            s.c_at(5, s.scale_point(7)).unwrap(),
            7f64.ln(),
            epsilon = 1e-14
        );
        assert_relative_eq!(7f64.ln(), 1.9459, epsilon = 1e-4);

        let s = ScaledLog::new(1.5, 0.0, 1.0, 0.0).unwrap();
        assert!(s.c_at(3, s.scale_point(2) - 1).is_err());
    }

    #[test]
    fn sandwich_between_scale_points() {
        for mode in [
            Interpolation::Lower,
            Interpolation::Upper,
            Interpolation::Geometric,
        ] {
            let s = ScaledLog::new(1.3, 2.0, 1.5, 0.7)
                .unwrap()
                .with_interpolation(mode);
            for n in 2..60u64 {
                let (lo, hi) = (s.scale_point(n), s.scale_point(n + 1));
                let (clo, chi) = (s.value_at_scale(3, n), s.value_at_scale(3, n + 1));
                for j in lo + 1..hi {
                    let c = s.c_at(3, j).unwrap();
                    assert!(clo <= c * (1.0 + 1e-12) && c <= chi * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn a_star_examples() {
        assert_relative_eq!(
            a_star(1.0, 1.5, 8).unwrap(),
            25.0 * (8f64.ln() + 2.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(a_star(1.0, 1.5, 8).unwrap(), 101.99, epsilon = 5e-3);
        assert_relative_eq!(a_star(0.8, 1.2, 16).unwrap(), 105.45, epsilon = 5e-3);
        // grows as b moves toward 2K (K1 = 2K - b shrinks)
        let lo = a_star(1.0, 1.1, 1 << 20).unwrap();
        let hi = a_star(1.0, 1.9, 1 << 20).unwrap();
        assert!(hi > lo && hi > 25.0 * 10.0);
        let err = a_star(0.5, 1.0, 8).unwrap_err();
        assert!(err.to_string().contains("2/ln N < K"));
        assert!(a_star(1.0, 0.9, 8)
            .unwrap_err()
            .to_string()
            .contains("K < b"));
        assert!(a_star(1.0, 1.6, 8)
            .unwrap_err()
            .to_string()
            .contains("b < 2K - 1/ln N"));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ratio_of_unclamped_probabilities(base in 2u32..9, delta in -0.9f64..3.0, c in 0.01f64..5.0, k in 3u64..40) {
                let p = ConnectionProfile::new(base, delta, Rates::LogPoly { c0: c, c1: 1.0, c2: 0.5, alpha: 1.5 }).unwrap();
                let (a, b) = (p.connection_probability(k).unwrap(), p.connection_probability(k + 1).unwrap());
                prop_assume!(a < 1.0 && b < 1.0 && a > 0.0);
                let expected = p.c(k + 1).unwrap() / p.c(k).unwrap() * (base as f64).powf(-(1.0 + delta));
                prop_assert!((b / a - expected).abs() <= 1e-10 * expected);
            }

            #[test]
            fn scaled_log_nondecreasing(k_scale in 0.3f64..3.0, c in 0.0f64..10.0, a in 0.1f64..50.0, b in 0.0f64..2.0, mode in 0usize..3, base in 2u32..10) {
                let mode = [Interpolation::Lower, Interpolation::Upper, Interpolation::Geometric][mode];
                let s = ScaledLog::new(k_scale, c, a, b).unwrap().with_interpolation(mode);
                let start = s.scale_point(2);
                let mut prev = 0.0;
                for j in start..start + 300 {
                    let v = s.c_at(base, j).unwrap();
                    prop_assert!(v >= prev * (1.0 - 1e-12));
                    prev = v;
                }
            }

            #[test]
            fn power_identity(base in 2u32..64, b in 0.0f64..3.0, n in 2u64..100_000) {
                let ln_n = (n as f64).ln();
                let lhs = (base as f64).powf(b * ln_n);
                let rhs = (n as f64).powf(b * (base as f64).ln());
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(rhs));
            }
        }
    }
}
