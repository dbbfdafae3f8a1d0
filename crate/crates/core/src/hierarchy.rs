//! Points, distance and ball combinatorics of the hierarchical group Ω_N.
//!
//! A point is a finitely supported digit sequence `(x_1, x_2, ...)` with
//! `x_i ∈ {0, ..., N-1}`. The distance between two points is the largest index
//! at which they differ. Inside a k-ball containing the origin a point is
//! identified with the integer `Σ x_i N^{i-1}` (its [`BallCoord`] index), so a
//! k-ball is the range `0..N^k` and its m-sub-balls are the blocks of `N^m`
//! consecutive indices.

use crate::error::{invalid, Error, Result};

/// Largest point count for which counting operations stay exact (`k·log₂N ≤ 62`).
pub const MAX_EXACT_POINTS: u64 = 1 << 62;

/// A point of Ω_N. Trailing zero digits are not stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Address {
    base: u32,
    digits: Vec<u32>,
}

impl Address {
    /// Builds an address from its digits `x_1, x_2, ...`.
    pub fn new(base: u32, digits: &[u32]) -> Result<Self> {
        check_base(base)?;
        if let Some(&d) = digits.iter().find(|&&d| d >= base) {
            return invalid(format!("digit {d} outside 0..{base}"));
        }
        let mut digits = digits.to_vec();
        while digits.last() == Some(&0) {
            digits.pop();
        }
        Ok(Address { base, digits })
    }

    /// The origin `0`.
    pub fn origin(base: u32) -> Result<Self> {
        Address::new(base, &[])
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Digit `x_i` for `i ≥ 1`.
    pub fn digit(&self, i: usize) -> u32 {
        if i == 0 {
            return 0;
        }
        self.digits.get(i - 1).copied().unwrap_or(0)
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Maximal index with a nonzero digit, `None` for the origin.
    pub fn support(&self) -> Option<usize> {
        if self.digits.is_empty() {
            None
        } else {
            Some(self.digits.len())
        }
    }

    pub fn is_origin(&self) -> bool {
        self.digits.is_empty()
    }

    /// Componentwise addition mod N.
    pub fn add(&self, other: &Address) -> Result<Address> {
        same_base(self, other)?;
        let len = self.digits.len().max(other.digits.len());
        let digits: Vec<u32> = (1..=len)
            .map(|i| (self.digit(i) + other.digit(i)) % self.base)
            .collect();
        Address::new(self.base, &digits)
    }
}

/// A point of the k-ball containing the origin, encoded by its first k digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BallCoord {
    pub level: u32,
    pub index: u64,
}

fn check_base(base: u32) -> Result<()> {
    if base < 2 {
        return invalid(format!("N must be at least 2, got {base}"));
    }
    Ok(())
}

fn same_base(x: &Address, y: &Address) -> Result<()> {
    if x.base != y.base {
        return invalid(format!("mismatched N: {} vs {}", x.base, y.base));
    }
    Ok(())
}

/// Hierarchical distance: 0 if equal, else the largest index where the digits differ.
pub fn distance(x: &Address, y: &Address) -> Result<u32> {
    same_base(x, y)?;
    let len = x.digits.len().max(y.digits.len());
    Ok((1..=len)
        .rev()
        .find(|&i| x.digit(i) != y.digit(i))
        .unwrap_or(0) as u32)
}

/// Distance between two points of a ball given by their [`BallCoord`] indices.
pub fn index_distance(base: u32, i: u64, j: u64) -> u32 {
    let base = base as u64;
    let (mut a, mut b) = (i, j);
    let mut d = 0;
    while a != b {
        a /= base;
        b /= base;
        d += 1;
    }
    d
}

/// `N^e` with an explicit overflow error past [`MAX_EXACT_POINTS`].
pub fn checked_power(base: u32, exp: u32) -> Result<u64> {
    check_base(base)?;
    (base as u64)
        .checked_pow(exp)
        .filter(|&v| v <= MAX_EXACT_POINTS)
        .ok_or_else(|| Error::Overflow(format!("{base}^{exp} exceeds 2^62")))
}

/// Number of points of a k-ball, `N^k`.
pub fn ball_point_count(base: u32, k: u32) -> Result<u64> {
    checked_power(base, k)
}

/// Number of boundary points of a k-ball, `N^{k-1}(N-1)`.
pub fn boundary_point_count(base: u32, k: u32) -> Result<u64> {
    if k == 0 {
        return invalid("boundary count needs k >= 1");
    }
    Ok(checked_power(base, k - 1)? * (base as u64 - 1))
}

/// Number of points of the (j, l]-annulus, `N^l - N^j`.
pub fn annulus_point_count(base: u32, j: u32, l: u32) -> Result<u64> {
    if j >= l {
        return invalid(format!("annulus needs j < l, got ({j}, {l}]"));
    }
    Ok(checked_power(base, l)? - checked_power(base, j)?)
}

/// Unordered pairs of a k-ball at distance exactly m: `N^k · N^{m-1}(N-1) / 2`.
pub fn pair_count_at_distance(base: u32, k: u32, m: u32) -> Result<u64> {
    if m == 0 || m > k {
        return invalid(format!("pair distance m={m} outside 1..={k}"));
    }
    let points = checked_power(base, k)? as u128;
    let shell = boundary_point_count(base, m)? as u128;
    let pairs = points * shell / 2;
    u64::try_from(pairs)
        .map_err(|_| Error::Overflow(format!("pair count at distance {m} in a {k}-ball")))
}

/// All unordered pairs of a k-ball, `N^k (N^k - 1) / 2`.
pub fn total_pair_count(base: u32, k: u32) -> Result<u64> {
    let points = checked_power(base, k)? as u128;
    u64::try_from(points * (points - 1) / 2)
        .map_err(|_| Error::Overflow(format!("pair count of a {k}-ball")))
}

/// Address of the point with the given index in the k-ball containing the origin.
pub fn index_to_address(base: u32, index: u64, k: u32) -> Result<Address> {
    let size = ball_point_count(base, k)?;
    if index >= size {
        return Err(Error::OutOfRange { index, bound: size });
    }
    let mut digits = Vec::with_capacity(k as usize);
    let mut rest = index;
    for _ in 0..k {
        digits.push((rest % base as u64) as u32);
        rest /= base as u64;
    }
    Address::new(base, &digits)
}

/// Inverse of [`index_to_address`]; fails if the point lies outside the k-ball.
pub fn address_to_index(addr: &Address, k: u32) -> Result<BallCoord> {
    if addr.support().is_some_and(|s| s > k as usize) {
        return invalid(format!("address has nonzero digits beyond level {k}"));
    }
    ball_point_count(addr.base, k)?;
    let index = addr
        .digits
        .iter()
        .rev()
        .fold(0u64, |acc, &d| acc * addr.base as u64 + d as u64);
    Ok(BallCoord { level: k, index })
}

/// Which m-ball inside the k-ball contains point `index`: `⌊index / N^m⌋`.
pub fn subball_index(base: u32, index: u64, k: u32, m: u32) -> Result<u64> {
    if m == 0 || m > k {
        return invalid(format!("sub-ball level m={m} outside 1..={k}"));
    }
    let size = ball_point_count(base, k)?;
    if index >= size {
        return Err(Error::OutOfRange { index, bound: size });
    }
    Ok(index / checked_power(base, m)?)
}
