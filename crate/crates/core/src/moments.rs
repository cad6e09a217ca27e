//! Exact permutation moments of the trend statistic.
//!
//! For `A = Σ_j x_j y_π(j)` with `π` uniform over all permutations, expanding
//! `A^k` groups the index tuples by their pattern of coincidences. Each pattern
//! contributes a sum over distinct indices of `x` monomials times the expected
//! `y` monomial at that many random distinct positions:
//!
//! ```text
//! E[A^k] = Σ_patterns  mult · D_x(pattern) · D_y(pattern) / n(n-1)…(n-d+1)
//! ```
//!
//! where `D_v` is the distinct-index sum (augmented monomial symmetric
//! function) of the pattern, written in power sums, and `d` is the number of
//! distinct indices. Patterns with `d > n` have no tuples and contribute zero.
//! The unstratified statistic is the single-stratum case with scaled vectors.

use crate::enumerate::for_each_permutation;
use crate::error::{Error, Result};
use crate::model::{power_sums, PowerSums, ScaledPair};
use crate::scalar::{Field, Real};

/// First four exact permutation moments, standardized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary<T> {
    pub mean: T,
    pub variance: T,
    pub skewness: T,
    pub excess_kurtosis: T,
}

impl<T: Real> MomentSummary<T> {
    /// Checks the moment inequality `k ≥ s² − 2` up to rounding.
    pub fn is_consistent(&self) -> bool {
        let slack = T::lit(1e-8) * (T::one() + self.skewness * self.skewness);
        self.variance > T::zero() && self.excess_kurtosis >= self.skewness * self.skewness - T::lit(2.0) - slack
    }
}

/// Raw second to fourth moments of one stratum's contribution `A_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumMoments<T> {
    pub m2: T,
    pub m3: T,
    pub m4: T,
}

/// Power sums over an arbitrary field.
pub fn field_power_sums<T: Field>(v: &[T]) -> PowerSums<T> {
    let mut s = PowerSums { s1: T::zero(), s2: T::zero(), s3: T::zero(), s4: T::zero() };
    for x in v {
        let x2 = x.clone() * x.clone();
        s.s1 = s.s1 + x.clone();
        s.s2 = s.s2 + x2.clone();
        s.s3 = s.s3 + x2.clone() * x.clone();
        s.s4 = s.s4 + x2.clone() * x2;
    }
    s
}

/// Sums over tuples of pairwise-distinct indices, keyed by exponent pattern.
struct DistinctSums<T> {
    d1: T,
    d2: T,
    d11: T,
    d3: T,
    d21: T,
    d111: T,
    d4: T,
    d31: T,
    d22: T,
    d211: T,
    d1111: T,
}

fn distinct_sums<T: Field>(p: &PowerSums<T>) -> DistinctSums<T> {
    let c = |k: usize| T::count(k);
    let (p1, p2, p3, p4) = (p.s1.clone(), p.s2.clone(), p.s3.clone(), p.s4.clone());
    let p1sq = p1.clone() * p1.clone();
    DistinctSums {
        d1: p1.clone(),
        d2: p2.clone(),
        d11: p1sq.clone() - p2.clone(),
        d3: p3.clone(),
        d21: p2.clone() * p1.clone() - p3.clone(),
        d111: p1sq.clone() * p1.clone() - c(3) * p2.clone() * p1.clone() + c(2) * p3.clone(),
        d4: p4.clone(),
        d31: p3.clone() * p1.clone() - p4.clone(),
        d22: p2.clone() * p2.clone() - p4.clone(),
        d211: p2.clone() * p1sq.clone() - p2.clone() * p2.clone() - c(2) * p3.clone() * p1.clone()
            + c(2) * p4.clone(),
        d1111: p1sq.clone() * p1sq.clone() - c(6) * p2.clone() * p1sq + c(3) * p2.clone() * p2
            + c(8) * p3 * p1
            - c(6) * p4,
    }
}

/// `n (n-1) … (n-d+1)`, or `None` when `d > n`.
fn falling<T: Field>(n: usize, d: usize) -> Option<T> {
    (d <= n).then(|| (0..d).fold(T::one(), |acc, i| acc * T::count(n - i)))
}

/// Raw moments `E[A]`, `E[A²]`, `E[A³]`, `E[A⁴]` of `A = Σ x_j y_π(j)` under
/// uniform permutation, from the power sums of `x` and `y` (length `n`).
pub fn permutation_raw_moments<T: Field>(x: &PowerSums<T>, y: &PowerSums<T>, n: usize) -> [T; 4] {
    let dx = distinct_sums(x);
    let dy = distinct_sums(y);
    let term = |mult: usize, a: &T, b: &T, d: usize| -> T {
        match falling::<T>(n, d) {
            Some(f) => T::count(mult) * a.clone() * b.clone() / f,
            None => T::zero(),
        }
    };
    let m1 = term(1, &dx.d1, &dy.d1, 1);
    let m2 = term(1, &dx.d2, &dy.d2, 1) + term(1, &dx.d11, &dy.d11, 2);
    let m3 = term(1, &dx.d3, &dy.d3, 1) + term(3, &dx.d21, &dy.d21, 2) + term(1, &dx.d111, &dy.d111, 3);
    let m4 = term(1, &dx.d4, &dy.d4, 1)
        + term(4, &dx.d31, &dy.d31, 2)
        + term(3, &dx.d22, &dy.d22, 2)
        + term(6, &dx.d211, &dy.d211, 3)
        + term(1, &dx.d1111, &dy.d1111, 4);
    [m1, m2, m3, m4]
}

/// Exact `E[A_k^j]`, `j = 2..4`, over any field; `y` must sum to exactly zero.
pub fn stratum_raw_moments_exact<T: Field>(x: &[T], y: &[T]) -> Result<StratumMoments<T>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("stratum x has {} values, y has {}", x.len(), y.len())));
    }
    let py = field_power_sums(y);
    if !py.s1.is_zero() {
        return Err(Error::Precondition("stratum y values must be centered".into()));
    }
    let [_, m2, m3, m4] = permutation_raw_moments(&field_power_sums(x), &py, x.len());
    Ok(StratumMoments { m2, m3, m4 })
}

/// `n · Σ v⁴ − 3` for a centered, unit-scaled vector.
pub fn vector_excess_kurtosis<T: Real>(v: &[T]) -> T {
    T::from_count(v.len()) * power_sums(v).s4 - T::lit(3.0)
}

/// Below this stratum size, moments come from enumerating all arrangements.
pub const ENUMERATION_MAX_SIZE: usize = 3;

/// Moments of one stratum's `A_k = Σ x_j y_π(j)` with `y_k` centered within the stratum.
///
/// `x_k` is used unscaled. Strata of size at most three are enumerated.
pub fn stratum_raw_moments<T: Real>(x_k: &[T], y_k: &[T]) -> Result<StratumMoments<T>> {
    let n = x_k.len();
    if y_k.len() != n {
        return Err(Error::DimensionMismatch(format!("stratum x has {n} values, y has {}", y_k.len())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty stratum".into()));
    }
    let py = power_sums(y_k);
    let rel = T::lit(1e-9).max(T::epsilon() * T::lit(64.0) * T::from_count(n).sqrt());
    let tol = rel * (T::from_count(n) * py.s2).sqrt().max(T::min_positive_value());
    if py.s1.abs() > tol {
        return Err(Error::Precondition(format!("stratum y values must be centered (sum {})", py.s1)));
    }
    if n <= ENUMERATION_MAX_SIZE {
        return Ok(enumerate_stratum(x_k, y_k));
    }
    // A is unchanged by shifting x when y sums to zero; centering x keeps the
    // power-sum cancellations small.
    let mean = x_k.iter().copied().sum::<T>() / T::from_count(n);
    let xc: Vec<T> = x_k.iter().map(|&v| v - mean).collect();
    let [_, m2, m3, m4] = permutation_raw_moments(&power_sums(&xc), &py, n);
    Ok(StratumMoments { m2, m3, m4 })
}

fn enumerate_stratum<T: Real>(x: &[T], y: &[T]) -> StratumMoments<T> {
    let mut ys = y.to_vec();
    let (mut m2, mut m3, mut m4, mut count) = (T::zero(), T::zero(), T::zero(), 0usize);
    for_each_permutation(&mut ys, |perm| {
        let a: T = x.iter().zip(perm).map(|(&u, &v)| u * v).sum();
        let a2 = a * a;
        m2 = m2 + a2;
        m3 = m3 + a2 * a;
        m4 = m4 + a2 * a2;
        count += 1;
    });
    let c = T::from_count(count);
    StratumMoments { m2: m2 / c, m3: m3 / c, m4: m4 / c }
}

/// Combines independent zero-mean stratum contributions into the moments of `A = Σ A_k`.
pub fn combine_strata<T: Real>(parts: &[StratumMoments<T>]) -> Result<MomentSummary<T>> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("no strata to combine".into()));
    }
    let var: T = parts.iter().map(|p| p.m2).sum();
    let third: T = parts.iter().map(|p| p.m3).sum();
    let sum_m4: T = parts.iter().map(|p| p.m4).sum();
    let sum_sq_m2: T = parts.iter().map(|p| p.m2 * p.m2).sum();
    // Σ_{k≠l} m2_k m2_l over ordered pairs.
    let cross = var * var - sum_sq_m2;
    let fourth = sum_m4 + T::lit(3.0) * cross;
    if !(var > T::zero()) {
        return Err(Error::Degenerate("permutation variance is zero".into()));
    }
    Ok(MomentSummary {
        mean: T::zero(),
        variance: var,
        skewness: third / var.powf(T::lit(1.5)),
        excess_kurtosis: fourth / (var * var) - T::lit(3.0),
    })
}

/// Exact permutation moments of `r = Σ x_j y_j` for a scaled pair.
pub fn unstratified_moments<T: Real>(p: &ScaledPair<T>) -> Result<MomentSummary<T>> {
    let (px, py) = (power_sums(p.x()), power_sums(p.y()));
    scaled_moments(px.s3, px.s4, py.s3, py.s4, p.len())
}

/// Moments of `r` from the third and fourth power sums of centered, unit-scaled vectors.
///
/// The first two power sums are taken as exactly 0 and 1, so the variance is `1/(n-1)`.
pub fn scaled_moments<T: Real>(x3: T, x4: T, y3: T, y4: T, n: usize) -> Result<MomentSummary<T>> {
    if n < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: n });
    }
    let unit = |s3, s4| PowerSums { s1: T::zero(), s2: T::one(), s3, s4 };
    let [_, _, m3, m4] = permutation_raw_moments(&unit(x3, x4), &unit(y3, y4), n);
    let variance = T::one() / T::from_count(n - 1);
    Ok(MomentSummary {
        mean: T::zero(),
        variance,
        skewness: m3 / variance.powf(T::lit(1.5)),
        excess_kurtosis: m4 / (variance * variance) - T::lit(3.0),
    })
}
