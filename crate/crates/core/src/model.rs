//! Data types and vector preprocessing shared by every test path.

use std::collections::HashMap;
use std::hash::Hash;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Above this length sums switch to compensated accumulation.
pub const COMPENSATED_THRESHOLD: usize = 10_000;

/// Neumaier-compensated sum.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// Sums `len` values, compensating when the vector is long.
#[inline]
pub(crate) fn sum_of<T: Real, I: IntoIterator<Item = T>>(values: I, len: usize) -> T {
    if len > COMPENSATED_THRESHOLD {
        compensated_sum(values)
    } else {
        values.into_iter().fold(T::zero(), |a, b| a + b)
    }
}

/// True when `v` has at least two distinct values.
pub fn has_variation<T: Real>(v: &[T]) -> bool {
    match v.first() {
        Some(&first) => v.iter().any(|&x| x != first),
        None => false,
    }
}

fn check_finite<T: Real>(v: &[T], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidArgument(format!("{what}: non-finite value at position {i}"))),
        None => Ok(()),
    }
}

/// Predictor matrix: rows are features, columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    values: Array2<T>,
    feature_ids: Vec<String>,
}

impl<T: Real> FeatureMatrix<T> {
    /// Builds a matrix. Constant rows are accepted; they are reported as
    /// untestable by the batch engines rather than rejected here.
    pub fn new(values: Array2<T>, feature_ids: Vec<String>) -> Result<Self> {
        let (m, n) = values.dim();
        if feature_ids.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} feature ids for {} rows",
                feature_ids.len(),
                m
            )));
        }
        if n < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: n });
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at row {i}, column {j}")));
        }
        Ok(Self { values, feature_ids })
    }

    /// Builds a matrix from row vectors, labelling features `f1`, `f2`, ...
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let ids = (1..=rows.len()).map(|i| format!("f{i}")).collect();
        Self::from_named_rows(rows, ids)
    }

    /// Builds a matrix from row vectors and their feature ids.
    pub fn from_named_rows(rows: &[Vec<T>], feature_ids: Vec<String>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("row {bad} has length {}, expected {n}", rows[bad].len())));
        }
        let flat: Vec<T> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let values = Array2::from_shape_vec((m, n), flat).map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::new(values, feature_ids)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.values.row(i)
    }

    /// Whether row `i` has at least two distinct values.
    pub fn is_testable(&self, i: usize) -> bool {
        let row = self.values.row(i);
        let first = row[0];
        row.iter().any(|&v| v != first)
    }
}

/// Response vector `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector<T>(Vec<T>);

impl<T: Real> ResponseVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_finite(&values, "response")?;
        if !has_variation(&values) {
            return Err(Error::Degenerate("response has fewer than two distinct values".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sums of the first four powers of a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSums<T> {
    pub s1: T,
    pub s2: T,
    pub s3: T,
    pub s4: T,
}

pub fn power_sums<T: Real>(v: &[T]) -> PowerSums<T> {
    let n = v.len();
    if n > COMPENSATED_THRESHOLD {
        PowerSums {
            s1: compensated_sum(v.iter().copied()),
            s2: compensated_sum(v.iter().map(|&x| x * x)),
            s3: compensated_sum(v.iter().map(|&x| x * x * x)),
            s4: compensated_sum(v.iter().map(|&x| {
                let x2 = x * x;
                x2 * x2
            })),
        }
    } else {
        let zero = T::zero();
        let (s1, s2, s3, s4) = v.iter().fold((zero, zero, zero, zero), |(a, b, c, d), &x| {
            let x2 = x * x;
            (a + x, b + x2, c + x2 * x, d + x2 * x2)
        });
        PowerSums { s1, s2, s3, s4 }
    }
}

/// Centers `v` and scales it to unit sum of squares.
pub fn scale_center<T: Real>(v: &[T]) -> Result<Vec<T>> {
    let n = v.len();
    if !has_variation(v) {
        return Err(Error::Degenerate("vector has fewer than two distinct values".into()));
    }
    let nt = T::from_count(n);
    let mean = sum_of(v.iter().copied(), n) / nt;
    let mut centered: Vec<T> = v.iter().map(|&x| x - mean).collect();
    // Second pass removes the rounding error left in the first mean.
    let residual = sum_of(centered.iter().copied(), n) / nt;
    centered.iter_mut().for_each(|x| *x = *x - residual);
    let norm = sum_of(centered.iter().map(|&x| x * x), n).sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::Degenerate("vector has zero spread".into()));
    }
    Ok(centered.into_iter().map(|x| x / norm).collect())
}

/// Tolerance used to validate centering and scaling invariants.
pub(crate) fn scaling_tolerance<T: Real>(n: usize) -> T {
    let floor = T::lit(1e-12);
    let eps = T::epsilon() * T::lit(64.0) * T::from_count(n.max(1)).sqrt();
    if eps > floor {
        eps
    } else {
        floor
    }
}

/// A centered, unit-scaled `(x, y)` pair; `Σ x y` is the Pearson correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPair<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Real> ScaledPair<T> {
    /// Centers and scales raw vectors.
    pub fn new(x: &[T], y: &[T]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("x has length {}, y has length {}", x.len(), y.len())));
        }
        Ok(Self { x: scale_center(x)?, y: scale_center(y)? })
    }

    /// Wraps vectors that are already centered and scaled, checking the invariants.
    pub fn from_scaled(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("x has length {}, y has length {}", x.len(), y.len())));
        }
        let tol = scaling_tolerance::<T>(x.len());
        for (name, v) in [("x", &x), ("y", &y)] {
            let ps = power_sums(v);
            if ps.s1.abs() > tol || (ps.s2 - T::one()).abs() > tol {
                return Err(Error::Precondition(format!(
                    "{name} is not centered and unit-scaled (sum {}, sum of squares {})",
                    ps.s1, ps.s2
                )));
            }
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same pair with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        Self { x: self.y.clone(), y: self.x.clone() }
    }
}

/// `Σ x_j y_j` of a scaled pair.
pub fn trend_statistic<T: Real>(p: &ScaledPair<T>) -> T {
    dot(p.x(), p.y())
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    sum_of(a.iter().zip(b).map(|(&u, &v)| u * v), a.len())
}

/// Partition of sample indices into strata for within-stratum permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrataAssignment {
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl StrataAssignment {
    /// Builds an assignment from labels in `1..=K`. Every stratum must be nonempty.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0);
        if labels.is_empty() {
            return Err(Error::InvalidArgument("empty strata assignment".into()));
        }
        if labels.contains(&0) {
            return Err(Error::InvalidArgument("stratum labels start at 1".into()));
        }
        let mut members = vec![Vec::new(); k];
        for (j, &l) in labels.iter().enumerate() {
            members[l - 1].push(j);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!("stratum {} is empty", empty + 1)));
        }
        Ok(Self { labels: labels.to_vec(), members })
    }

    /// Builds an assignment from arbitrary keys, numbering strata by first appearance.
    pub fn from_keys<K: Hash + Eq + Clone>(keys: &[K]) -> Result<Self> {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let labels: Vec<usize> = keys
            .iter()
            .map(|key| {
                let next = ids.len() + 1;
                *ids.entry(key.clone()).or_insert(next)
            })
            .collect();
        Self::from_labels(&labels)
    }

    /// A single stratum covering `n` samples.
    pub fn single(n: usize) -> Result<Self> {
        Self::from_labels(&vec![1; n])
    }

    /// Stratum label (1-based) of each sample.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_strata(&self) -> usize {
        self.members.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// Sample indices of each stratum, in increasing order.
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }
}
