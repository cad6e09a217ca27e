//! Batch MCC p-values for many features against one response.
//!
//! Each feature row needs only its mean, three centered power sums and one
//! cross product with the scaled response, so a matrix of `m` rows by `n`
//! samples costs `O(mn)`.

use rayon::prelude::*;

use crate::density::{fit_density, DensityFit, DensityKind};
use crate::error::{Error, Result};
use crate::model::{has_variation, scale_center, sum_of, FeatureMatrix, ResponseVector, COMPENSATED_THRESHOLD};
use crate::moments::{scaled_moments, MomentSummary};
use crate::scalar::Real;

/// Default offset of the continuity correction.
pub const DEFAULT_CONTINUITY_OFFSET: f64 = 0.5;

/// Anything that can report the two tail probabilities of a null distribution.
pub trait NullDistribution<T> {
    /// `(Pr(R ≤ r), Pr(R ≥ r))`.
    fn tail_probs(&self, r: T) -> (T, T);
    fn kind(&self) -> DensityKind;
}

impl<T: Real> NullDistribution<T> for DensityFit<T> {
    fn tail_probs(&self, r: T) -> (T, T) {
        DensityFit::tail_probs(self, r)
    }

    fn kind(&self) -> DensityKind {
        DensityFit::kind(self)
    }
}

/// Continuity correction for discrete statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ContinuityCorrection {
    /// On for stratified data whose values are all integers, off otherwise.
    #[default]
    Auto,
    Off,
    /// Offset on the scale of `Σ x (y − ȳ)` with raw values.
    Offset(f64),
}

/// What to do with strata too small for the closed-form moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmallStrata {
    /// Enumerate every within-stratum arrangement.
    #[default]
    Enumerate,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub continuity: ContinuityCorrection,
    pub small_strata: SmallStrata,
    /// Significant digits for printed p-values.
    pub precision: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { continuity: ContinuityCorrection::Auto, small_strata: SmallStrata::Enumerate, precision: 6 }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if let ContinuityCorrection::Offset(c) = self.continuity {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidArgument(format!("continuity offset must be non-negative, got {c}")));
            }
        }
        if self.precision == 0 || self.precision > 17 {
            return Err(Error::InvalidArgument(format!("precision must be in 1..=17, got {}", self.precision)));
        }
        Ok(())
    }

    /// Offset to apply given whether the data qualify for the automatic rule.
    pub fn continuity_offset(&self, auto_applies: bool) -> f64 {
        match self.continuity {
            ContinuityCorrection::Auto if auto_applies => DEFAULT_CONTINUITY_OFFSET,
            ContinuityCorrection::Auto | ContinuityCorrection::Off => 0.0,
            ContinuityCorrection::Offset(c) => c,
        }
    }
}

/// Tail, two-sided and doubled p-values for one observed statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValueSet<T> {
    pub p_left: T,
    pub p_right: T,
    pub p_two: T,
    pub p_directional: T,
    pub p_double: T,
    pub fit_kind: DensityKind,
    pub r_obs: T,
}

fn clamp_prob<T: Real>(p: T) -> T {
    p.max(T::zero()).min(T::one())
}

/// P-values of `r_obs` under `fit`.
pub fn pvalue_set<T: Real, D: NullDistribution<T> + ?Sized>(fit: &D, r_obs: T) -> PValueSet<T> {
    pvalue_set_with_offset(fit, r_obs, T::zero())
}

/// As [`pvalue_set`], with each tail evaluated `offset` closer to the null.
pub fn pvalue_set_with_offset<T: Real, D: NullDistribution<T> + ?Sized>(fit: &D, r_obs: T, offset: T) -> PValueSet<T> {
    let a = r_obs.abs();
    let (p_left, p_right, p_two) = if offset == T::zero() {
        // One evaluation at r and one at its mirror cover every tail.
        let (left, right) = fit.tail_probs(r_obs);
        let (mirror_left, mirror_right) = fit.tail_probs(-r_obs);
        let two = if r_obs >= T::zero() { mirror_left + right } else { left + mirror_right };
        (left, right, two)
    } else {
        (
            fit.tail_probs(r_obs + offset).0,
            fit.tail_probs(r_obs - offset).1,
            fit.tail_probs(-a + offset).0 + fit.tail_probs(a - offset).1,
        )
    };
    let (p_left, p_right, p_two) = (clamp_prob(p_left), clamp_prob(p_right), clamp_prob(p_two));
    let p_directional = p_left.min(p_right);
    PValueSet {
        p_left,
        p_right,
        p_two,
        p_directional,
        p_double: (T::lit(2.0) * p_directional).min(T::one()),
        fit_kind: fit.kind(),
        r_obs,
    }
}

/// Everything computed for one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct RowReport<T> {
    pub n: usize,
    pub moments: MomentSummary<T>,
    pub fit: DensityFit<T>,
    pub pvalues: PValueSet<T>,
}

/// A response vector scaled once and shared by every row.
#[derive(Debug, Clone)]
pub struct PreparedResponse<T> {
    scaled: Vec<T>,
    s3: T,
    s4: T,
    /// Euclidean norm of the centered raw response.
    norm: T,
}

impl<T: Real> PreparedResponse<T> {
    pub fn new(y: &[T]) -> Result<Self> {
        if y.len() < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: y.len() });
        }
        let scaled = scale_center(y)?;
        let sums = centered_sums(y, None);
        let ps = crate::model::power_sums(&scaled);
        Ok(Self { s3: ps.s3, s4: ps.s4, norm: sums.c2.sqrt(), scaled })
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn scaled(&self) -> &[T] {
        &self.scaled
    }
}

/// Centered power sums of a raw row and its cross product with `other`.
#[derive(Debug, Clone, Copy)]
struct CenteredSums<T> {
    c2: T,
    c3: T,
    c4: T,
    cross: T,
}

fn centered_sums<T: Real>(v: &[T], other: Option<&[T]>) -> CenteredSums<T> {
    let n = v.len();
    let nt = T::from_count(n);
    let mean = sum_of(v.iter().copied(), n) / nt;
    let mean = mean + sum_of(v.iter().map(|&x| x - mean), n) / nt;
    let zero = T::zero();
    if n > COMPENSATED_THRESHOLD {
        let c = |p: i32| sum_of(v.iter().map(|&x| (x - mean).powi(p)), n);
        let cross = other.map_or(zero, |o| sum_of(v.iter().zip(o).map(|(&x, &y)| (x - mean) * y), n));
        return CenteredSums { c2: c(2), c3: c(3), c4: c(4), cross };
    }
    let (c2, c3, c4) = v.iter().fold((zero, zero, zero), |(a, b, c), &x| {
        let d = x - mean;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    let cross = other.map_or(zero, |o| v.iter().zip(o).fold(zero, |acc, (&x, &y)| acc + (x - mean) * y));
    CenteredSums { c2, c3, c4, cross }
}

fn row_report<T: Real>(row: &[T], y: &PreparedResponse<T>, config: &AnalysisConfig) -> Result<RowReport<T>> {
    let n = row.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch(format!("row has {n} values, response has {}", y.len())));
    }
    if !has_variation(row) {
        return Err(Error::Degenerate("feature has fewer than two distinct values".into()));
    }
    let sums = centered_sums(row, Some(y.scaled()));
    let norm = sums.c2.sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::Degenerate("feature has zero spread".into()));
    }
    let r_obs = (sums.cross / norm).max(-T::one()).min(T::one());
    let moments = scaled_moments(sums.c3 / (sums.c2 * norm), sums.c4 / (sums.c2 * sums.c2), y.s3, y.s4, n)?;
    let fit = fit_density(&moments);
    // The automatic correction is reserved for stratified discrete data.
    let offset = T::lit(config.continuity_offset(false)) / (norm * y.norm);
    Ok(RowReport { n, moments, fit, pvalues: pvalue_set_with_offset(&fit, r_obs, offset) })
}

/// Full MCC report for a single feature.
pub fn mcc_row_report<T: Real>(x_row: &[T], y: &[T], config: &AnalysisConfig) -> Result<RowReport<T>> {
    config.validate()?;
    if x_row.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("x has {} values, y has {}", x_row.len(), y.len())));
    }
    row_report(x_row, &PreparedResponse::new(y)?, config)
}

/// MCC p-values for a single feature.
pub fn mcc_row<T: Real>(x_row: &[T], y: &[T], config: &AnalysisConfig) -> Result<PValueSet<T>> {
    mcc_row_report(x_row, y, config).map(|r| r.pvalues)
}

/// MCC reports for every row of `x`, in row order.
///
/// Rows that cannot be tested yield an error in their slot; the batch itself
/// fails only on a dimension mismatch or invalid configuration.
pub fn mcc_matrix<T: Real>(
    x: &FeatureMatrix<T>,
    y: &ResponseVector<T>,
    config: &AnalysisConfig,
) -> Result<Vec<Result<RowReport<T>>>> {
    config.validate()?;
    if x.ncols() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "feature matrix has {} samples, response has {}",
            x.ncols(),
            y.len()
        )));
    }
    let prepared = PreparedResponse::new(y.values())?;
    let values = x.values();
    Ok((0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let row = values.row(i);
            match row.as_slice() {
                Some(s) => row_report(s, &prepared, config),
                None => row_report(&row.to_vec(), &prepared, config),
            }
        })
        .collect())
}
