//! Covariate control: least-squares residualization and within-stratum permutation.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::density::fit_density;
use crate::engine::{pvalue_set_with_offset, AnalysisConfig, RowReport, SmallStrata};
use crate::error::{Error, Result};
use crate::model::{FeatureMatrix, StrataAssignment};
use crate::moments::{combine_strata, stratum_raw_moments, MomentSummary, ENUMERATION_MAX_SIZE};
use crate::scalar::Real;

/// A column whose norm shrinks below this fraction after projection is dependent.
const RANK_TOLERANCE: f64 = 1e-9;

/// Covariates as an `n × q` matrix (samples in rows), with an implicit intercept.
#[derive(Debug, Clone)]
pub struct CovariateMatrix<T> {
    z: Array2<T>,
    /// Orthonormal basis of `[1, Z]`, one basis vector per row.
    basis: Array2<T>,
}

impl<T: Real> CovariateMatrix<T> {
    pub fn new(z: Array2<T>) -> Result<Self> {
        let (n, q) = z.dim();
        if n < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: n });
        }
        if q + 2 >= n {
            return Err(Error::Precondition(format!("{q} covariates leave too few degrees of freedom for {n} samples")));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("covariates contain non-finite values".into()));
        }
        let basis = orthonormal_basis(z.view())?;
        Ok(Self { z, basis })
    }

    /// Intercept only.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(Array2::zeros((n, 0)))
    }

    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("covariate columns differ in length".into()));
        }
        let z = Array2::from_shape_fn((n, columns.len()), |(i, j)| columns[j][i]);
        Self::new(z)
    }

    pub fn nsamples(&self) -> usize {
        self.z.nrows()
    }

    pub fn ncovariates(&self) -> usize {
        self.z.ncols()
    }

    pub fn values(&self) -> &Array2<T> {
        &self.z
    }

    /// Residual of `v` after least-squares projection onto `[1, Z]`.
    pub fn residualize(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.nsamples() {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} values, covariates have {} samples",
                v.len(),
                self.nsamples()
            )));
        }
        let mut out = v.to_vec();
        project_out(&self.basis, &mut out);
        Ok(out)
    }
}

fn dot<T: Real>(a: impl Iterator<Item = T>, b: impl Iterator<Item = T>) -> T {
    a.zip(b).fold(T::zero(), |acc, (u, v)| acc + u * v)
}

/// Removes the span of the basis rows from `v`, twice for numerical stability.
fn project_out<T: Real>(basis: &Array2<T>, v: &mut [T]) {
    for _ in 0..2 {
        for q in basis.rows() {
            let c = dot(q.iter().copied(), v.iter().copied());
            v.iter_mut().zip(q.iter()).for_each(|(x, &b)| *x = *x - c * b);
        }
    }
}

/// Gram-Schmidt with reorthogonalization over `[1, Z]`.
fn orthonormal_basis<T: Real>(z: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let (n, q) = z.dim();
    let mut basis = Array2::zeros((0, n));
    let mut dependent = Vec::new();
    let columns = std::iter::once(vec![T::one(); n]).chain(z.columns().into_iter().map(|c| c.to_vec()));
    for (j, mut col) in columns.enumerate() {
        let before = dot(col.iter().copied(), col.iter().copied()).sqrt();
        project_out(&basis, &mut col);
        let after = dot(col.iter().copied(), col.iter().copied()).sqrt();
        if !(before > T::zero()) || after <= T::lit(RANK_TOLERANCE) * before {
            // Column 0 is the intercept; report covariate indices.
            if j > 0 {
                dependent.push(j - 1);
            }
            continue;
        }
        col.iter_mut().for_each(|v| *v = *v / after);
        basis.push_row(ndarray::ArrayView1::from(&col)).expect("row length matches");
    }
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }
    debug_assert_eq!(basis.nrows(), q + 1);
    Ok(basis)
}

/// Least-squares residual of `v` on `[1, Z]`.
pub fn residualize<T: Real>(v: &[T], z: &CovariateMatrix<T>) -> Result<Vec<T>> {
    z.residualize(v)
}

/// Residualizes every feature row against the same covariates.
pub fn residualize_matrix<T: Real>(x: &FeatureMatrix<T>, z: &CovariateMatrix<T>) -> Result<FeatureMatrix<T>> {
    if x.ncols() != z.nsamples() {
        return Err(Error::DimensionMismatch(format!(
            "feature matrix has {} samples, covariates have {}",
            x.ncols(),
            z.nsamples()
        )));
    }
    let rows: Vec<Vec<T>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let mut row = x.row(i).to_vec();
            project_out(&z.basis, &mut row);
            row
        })
        .collect();
    let values = Array2::from_shape_fn((x.nrows(), x.ncols()), |(i, j)| rows[i][j]);
    FeatureMatrix::new(values, x.feature_ids().to_vec())
}

fn is_integer<T: Real>(v: T) -> bool {
    v.fract() == T::zero()
}

/// Whether the automatic continuity correction applies: all values are integers.
pub fn integer_valued<T: Real>(x: &[T], y: &[T]) -> bool {
    x.iter().chain(y).all(|&v| is_integer(v))
}

/// MCC for `A = Σ_k A_k` with permutation only inside strata.
///
/// The statistic is reported on the correlation scale of the within-stratum
/// centered vectors; for a single stratum it is the ordinary correlation.
pub fn stratified_mcc_report<T: Real>(
    x: &[T],
    y: &[T],
    strata: &StrataAssignment,
    config: &AnalysisConfig,
) -> Result<RowReport<T>> {
    config.validate()?;
    let n = x.len();
    if y.len() != n || strata.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "x has {n} values, y has {}, strata cover {}",
            y.len(),
            strata.len()
        )));
    }
    let mut parts = Vec::with_capacity(strata.num_strata());
    let (mut a_obs, mut ssx, mut ssy) = (T::zero(), T::zero(), T::zero());
    for members in strata.members() {
        let m = members.len();
        if m <= ENUMERATION_MAX_SIZE && config.small_strata == SmallStrata::Reject {
            return Err(Error::Precondition(format!("stratum of size {m} is below the closed-form minimum of 4")));
        }
        let center = |v: &[T]| {
            let vals: Vec<T> = members.iter().map(|&i| v[i]).collect();
            let mean = vals.iter().copied().sum::<T>() / T::from_count(m);
            vals.into_iter().map(|u| u - mean).collect::<Vec<T>>()
        };
        let (xk, yk) = (center(x), center(y));
        a_obs = a_obs + dot(xk.iter().copied(), yk.iter().copied());
        ssx = ssx + dot(xk.iter().copied(), xk.iter().copied());
        ssy = ssy + dot(yk.iter().copied(), yk.iter().copied());
        parts.push(stratum_raw_moments(&xk, &yk)?);
    }
    let scale = (ssx * ssy).sqrt();
    if !(scale > T::zero()) {
        return Err(Error::Degenerate("no within-stratum variation".into()));
    }
    let on_a = combine_strata(&parts)?;
    let moments = MomentSummary { variance: on_a.variance / (scale * scale), ..on_a };
    let fit = fit_density(&moments);
    let offset = T::lit(config.continuity_offset(integer_valued(x, y))) / scale;
    let r_obs = a_obs / scale;
    Ok(RowReport { n, moments, fit, pvalues: pvalue_set_with_offset(&fit, r_obs, offset) })
}

/// Stratified MCC p-values for one feature.
pub fn stratified_mcc_row<T: Real>(
    x: &[T],
    y: &[T],
    strata: &StrataAssignment,
    config: &AnalysisConfig,
) -> Result<crate::engine::PValueSet<T>> {
    stratified_mcc_report(x, y, strata, config).map(|r| r.pvalues)
}

/// Stratified MCC for every row, in row order.
pub fn stratified_mcc_matrix<T: Real>(
    x: &FeatureMatrix<T>,
    y: &[T],
    strata: &StrataAssignment,
    config: &AnalysisConfig,
) -> Result<Vec<Result<RowReport<T>>>> {
    config.validate()?;
    if x.ncols() != y.len() || strata.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "feature matrix has {} samples, response has {}, strata cover {}",
            x.ncols(),
            y.len(),
            strata.len()
        )));
    }
    Ok((0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i).to_vec();
            if !crate::model::has_variation(&row) {
                return Err(Error::Degenerate("feature has fewer than two distinct values".into()));
            }
            stratified_mcc_report(&row, y, strata, config)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{mcc_row, ContinuityCorrection};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 4.0 - 1.0).collect()
    }

    #[test]
    fn intercept_only_centers() {
        let v: [f64; 4] = [1.0, 2.0, 3.0, 10.0];
        let r = residualize(&v, &CovariateMatrix::empty(4).unwrap()).unwrap();
        for (a, b) in r.iter().zip([-3.0, -2.0, -1.0, 6.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_is_orthogonal_and_idempotent() {
        let n = 40;
        let z = CovariateMatrix::from_columns(&[random(n, 1), random(n, 2), random(n, 3)]).unwrap();
        let v = random(n, 4);
        let r = residualize(&v, &z).unwrap();
        for j in 0..3 {
            let col = z.values().column(j);
            assert!(col.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-10);
        }
        assert!(r.iter().sum::<f64>().abs() < 1e-10);
        let rr = residualize(&r, &z).unwrap();
        assert!(r.iter().zip(&rr).all(|(a, b)| (a - b).abs() < 1e-12));
        // A covariate itself leaves nothing behind.
        let gone = residualize(&random(n, 2), &z).unwrap();
        assert!(gone.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let a = random(10, 1);
        let twice: Vec<f64> = a.iter().map(|v| 2.0 * v + 1.0).collect();
        let err = CovariateMatrix::from_columns(&[a, random(10, 2), twice]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { ref columns } if columns == &vec![2]), "{err:?}");
        let constant = vec![3.0; 10];
        assert!(matches!(
            CovariateMatrix::from_columns(&[constant]),
            Err(Error::RankDeficient { ref columns }) if columns == &vec![0]
        ));
        assert!(CovariateMatrix::from_columns(&[random(5, 1), random(5, 2), random(5, 3)]).is_err());
    }

    #[test]
    fn matrix_matches_rows() {
        let n = 12;
        let z = CovariateMatrix::from_columns(&[random(n, 7)]).unwrap();
        let rows = vec![random(n, 8), random(n, 9)];
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let rx = residualize_matrix(&x, &z).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let single = residualize(row, &z).unwrap();
            for (a, b) in rx.row(i).iter().zip(&single) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_stratum_matches_unstratified() {
        let x = random(15, 1);
        let y: Vec<f64> = random(15, 2).iter().map(|v| v.exp()).collect();
        let cfg = AnalysisConfig::default();
        let strat = stratified_mcc_row(&x, &y, &StrataAssignment::single(15).unwrap(), &cfg).unwrap();
        let plain = mcc_row(&x, &y, &cfg).unwrap();
        assert!((strat.p_left - plain.p_left).abs() < 1e-10);
        assert!((strat.p_right - plain.p_right).abs() < 1e-10);
        assert!((strat.r_obs - plain.r_obs).abs() < 1e-12);
    }

    #[test]
    fn invariant_to_relabeling_and_reordering() {
        let x = random(14, 3);
        let y = random(14, 4);
        let labels: Vec<usize> = (0..14).map(|i| 1 + i % 3).collect();
        let cfg = AnalysisConfig::default();
        let base = stratified_mcc_row(&x, &y, &StrataAssignment::from_labels(&labels).unwrap(), &cfg).unwrap();
        let relabeled: Vec<usize> = labels.iter().map(|&l| 4 - l).collect();
        let other = stratified_mcc_row(&x, &y, &StrataAssignment::from_labels(&relabeled).unwrap(), &cfg).unwrap();
        assert!((base.p_left - other.p_left).abs() < 1e-12);
        let order: Vec<usize> = (0..14).rev().collect();
        let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let ls: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        let moved = stratified_mcc_row(&xs, &ys, &StrataAssignment::from_labels(&ls).unwrap(), &cfg).unwrap();
        assert!((base.p_left - moved.p_left).abs() < 1e-12);
    }

    #[test]
    fn small_strata_policy() {
        let x = random(9, 5);
        let y = random(9, 6);
        let labels = [1, 1, 1, 2, 2, 2, 2, 2, 2];
        let strata = StrataAssignment::from_labels(&labels).unwrap();
        let reject = AnalysisConfig { small_strata: SmallStrata::Reject, ..Default::default() };
        assert!(stratified_mcc_row(&x, &y, &strata, &reject).is_err());
        assert!(stratified_mcc_row(&x, &y, &strata, &AnalysisConfig::default()).is_ok());
    }

    #[test]
    fn continuity_defaults_on_for_integer_data() {
        let x = [0.0, 1.0, 2.0, 0.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0];
        let y = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let strata = StrataAssignment::from_labels(&[1, 1, 1, 1, 1, 2, 2, 2, 2, 2]).unwrap();
        let auto = stratified_mcc_row(&x, &y, &strata, &AnalysisConfig::default()).unwrap();
        let explicit = AnalysisConfig { continuity: ContinuityCorrection::Offset(0.5), ..Default::default() };
        let off = AnalysisConfig { continuity: ContinuityCorrection::Off, ..Default::default() };
        assert_eq!(auto, stratified_mcc_row(&x, &y, &strata, &explicit).unwrap());
        let plain = stratified_mcc_row(&x, &y, &strata, &off).unwrap();
        assert!(auto.p_right > plain.p_right);
        assert!(!integer_valued(&[0.5], &[1.0]));
    }
}
