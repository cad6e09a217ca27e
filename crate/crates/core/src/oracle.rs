//! Reference permutation p-values: full enumeration for small problems and
//! seeded Monte Carlo otherwise.
//!
//! Both engines work with `A = Σ_k Σ x (y − ȳ_k)` on values centered within
//! each stratum, reported on the correlation scale. Without strata this is
//! the ordinary correlation.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::enumerate::{binomial, factorial, for_each_combination, for_each_permutation};
use crate::error::{Error, Result};
use crate::model::{FeatureMatrix, ResponseVector, StrataAssignment};
use crate::moments::MomentSummary;
use crate::scalar::Real;

/// Largest enumeration the exhaustive engine will attempt.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Permuted statistics within this distance of the observed one count as ties.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Default number of permutations per Monte Carlo batch.
pub const BATCH_SIZE: usize = 4096;

/// Reference p-values with their uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub r_obs: f64,
    pub p_left: f64,
    pub p_right: f64,
    pub p_double: f64,
    /// Tail probabilities counting ties with weight one half.
    pub mid_p_left: f64,
    pub mid_p_right: f64,
    pub se_left: f64,
    pub se_right: f64,
    /// Number of draws, or number of equally likely arrangements enumerated.
    pub draws: u64,
    pub exhaustive: bool,
    /// Sample moments of the permuted statistic.
    pub moments: MomentSummary<f64>,
}

/// Within-stratum centered data on the correlation scale.
struct Prepared {
    x: Vec<f64>,
    y: Vec<f64>,
    groups: Vec<Vec<usize>>,
    r_obs: f64,
}

fn prepare<T: Real>(x: &[T], y: &[T], strata: Option<&StrataAssignment>) -> Result<Prepared> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("x has {n} values, y has {}", y.len())));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let groups = match strata {
        Some(s) if s.len() != n => {
            return Err(Error::DimensionMismatch(format!("strata cover {} samples, data have {n}", s.len())))
        }
        Some(s) => s.members().to_vec(),
        None => vec![(0..n).collect()],
    };
    let mut xc = vec![0.0; n];
    let mut yc = vec![0.0; n];
    for g in &groups {
        for (src, dst) in [(x, &mut xc), (y, &mut yc)] {
            let mean = g.iter().map(|&i| src[i].as_f64()).sum::<f64>() / g.len() as f64;
            g.iter().for_each(|&i| dst[i] = src[i].as_f64() - mean);
        }
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (nx, ny) = (norm(&xc), norm(&yc));
    // Degenerate data: every arrangement gives zero.
    let (sx, sy) = (if nx > 0.0 { nx } else { 1.0 }, if ny > 0.0 { ny } else { 1.0 });
    xc.iter_mut().for_each(|v| *v /= sx);
    yc.iter_mut().for_each(|v| *v /= sy);
    let r_obs = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
    Ok(Prepared { x: xc, y: yc, groups, r_obs })
}

/// Weighted tallies of the permutation distribution.
#[derive(Debug, Clone, Default)]
struct Tally {
    weight: f64,
    le: f64,
    ge: f64,
    tie: f64,
    sums: [f64; 4],
}

impl Tally {
    fn add(&mut self, r: f64, r_obs: f64, w: f64) {
        self.weight += w;
        if r <= r_obs + TIE_TOLERANCE {
            self.le += w;
        }
        if r >= r_obs - TIE_TOLERANCE {
            self.ge += w;
        }
        if (r - r_obs).abs() <= TIE_TOLERANCE {
            self.tie += w;
        }
        let r2 = r * r;
        self.sums[0] += w * r;
        self.sums[1] += w * r2;
        self.sums[2] += w * r2 * r;
        self.sums[3] += w * r2 * r2;
    }

    fn merge(mut self, other: &Tally) -> Tally {
        self.weight += other.weight;
        self.le += other.le;
        self.ge += other.ge;
        self.tie += other.tie;
        for k in 0..4 {
            self.sums[k] += other.sums[k];
        }
        self
    }

    fn moments(&self) -> MomentSummary<f64> {
        let w = self.weight;
        let m1 = self.sums[0] / w;
        let (e2, e3, e4) = (self.sums[1] / w, self.sums[2] / w, self.sums[3] / w);
        let var = (e2 - m1 * m1).max(0.0);
        let c3 = e3 - 3.0 * m1 * e2 + 2.0 * m1.powi(3);
        let c4 = e4 - 4.0 * m1 * e3 + 6.0 * m1 * m1 * e2 - 3.0 * m1.powi(4);
        // Shape is undefined for a point mass.
        let (skew, kurt) = if var > 0.0 { (c3 / var.powf(1.5), c4 / (var * var) - 3.0) } else { (f64::NAN, f64::NAN) };
        MomentSummary { mean: m1, variance: var, skewness: skew, excess_kurtosis: kurt }
    }
}

/// One stratum's contribution under each equally likely arrangement.
fn stratum_outcomes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    let first = x.first().copied().unwrap_or(0.0);
    let other = x.iter().copied().find(|&v| v != first);
    let binary = other.is_some_and(|b| x.iter().all(|&v| v == first || v == b));
    if other.is_none() {
        // A constant x contributes the same value under every arrangement.
        return vec![x.iter().zip(y).map(|(a, b)| a * b).sum()];
    }
    if binary {
        // Only the set of y values landing on the second level matters; every
        // set is equally likely.
        let b = other.expect("two levels");
        let k = x.iter().filter(|&&v| v == b).count();
        let total: f64 = y.iter().sum();
        let mut out = Vec::with_capacity(binomial(m, k) as usize);
        for_each_combination(m, k, |idx| {
            let sub: f64 = idx.iter().map(|&i| y[i]).sum();
            out.push(first * (total - sub) + b * sub);
        });
        return out;
    }
    let mut ys = y.to_vec();
    let mut out = Vec::with_capacity(factorial(m) as usize);
    for_each_permutation(&mut ys, |p| out.push(x.iter().zip(p).map(|(a, b)| a * b).sum()));
    out
}

fn stratum_size(x: &[f64]) -> f64 {
    let first = x[0];
    match x.iter().copied().find(|&v| v != first) {
        None => 1.0,
        Some(b) if x.iter().all(|&v| v == first || v == b) => binomial(x.len(), x.iter().filter(|&&v| v == b).count()),
        Some(_) => factorial(x.len()),
    }
}

/// Number of equally likely arrangements the exhaustive engine would visit.
pub fn enumeration_size<T: Real>(x: &[T], y: &[T], strata: Option<&StrataAssignment>) -> Result<f64> {
    let p = prepare(x, y, strata)?;
    Ok(p.groups.iter().map(|g| stratum_size(&g.iter().map(|&i| p.x[i]).collect::<Vec<_>>())).product())
}

/// Exact tail probabilities by enumerating every equally likely arrangement.
///
/// Ties count fully toward both tails; mid-p values are reported alongside.
/// Two-level `x` within a stratum is enumerated over group assignments.
pub fn exhaustive_pvalues<T: Real>(x: &[T], y: &[T], strata: Option<&StrataAssignment>) -> Result<OracleResult> {
    let size = enumeration_size(x, y, strata)?;
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge { size, limit: ENUMERATION_LIMIT });
    }
    let p = prepare(x, y, strata)?;
    let lists: Vec<Vec<f64>> = p
        .groups
        .iter()
        .map(|g| {
            let gx: Vec<f64> = g.iter().map(|&i| p.x[i]).collect();
            let gy: Vec<f64> = g.iter().map(|&i| p.y[i]).collect();
            stratum_outcomes(&gx, &gy)
        })
        .collect();
    let mut tally = Tally::default();
    walk(&lists, 0, 0.0, p.r_obs, &mut tally);
    Ok(finish(p.r_obs, &tally, true))
}

fn walk(lists: &[Vec<f64>], depth: usize, acc: f64, r_obs: f64, tally: &mut Tally) {
    if depth == lists.len() {
        tally.add(acc, r_obs, 1.0);
        return;
    }
    for &v in &lists[depth] {
        walk(lists, depth + 1, acc + v, r_obs, tally);
    }
}

fn finish(r_obs: f64, t: &Tally, exhaustive: bool) -> OracleResult {
    let draws = t.weight.round() as u64;
    let (p_left, p_right, se_left, se_right) = if exhaustive {
        (t.le / t.weight, t.ge / t.weight, 0.0, 0.0)
    } else {
        let b = t.weight;
        let pl = (t.le + 1.0) / (b + 1.0);
        let pr = (t.ge + 1.0) / (b + 1.0);
        (pl, pr, (pl * (1.0 - pl) / b).sqrt(), (pr * (1.0 - pr) / b).sqrt())
    };
    let half_tie = 0.5 * t.tie / t.weight;
    let (mid_p_left, mid_p_right) = (p_left - half_tie, p_right - half_tie);
    OracleResult {
        r_obs,
        p_left,
        p_right,
        p_double: (2.0 * p_left.min(p_right)).min(1.0),
        mid_p_left: mid_p_left.max(0.0),
        mid_p_right: mid_p_right.max(0.0),
        se_left,
        se_right,
        draws,
        exhaustive,
        moments: t.moments(),
    }
}

/// Mixes a seed with stream coordinates (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, feature: u64, batch: u64) -> u64 {
    let mut z = seed
        .wrapping_add(feature.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(batch.wrapping_mul(0xD1B5_4A32_D192_ED03));
    for _ in 0..2 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Shuffles `y` in place, separately inside each group.
fn shuffle_within(y: &mut [f64], groups: &[Vec<usize>], scratch: &mut Vec<f64>, rng: &mut ChaCha8Rng) {
    if groups.len() == 1 && groups[0].len() == y.len() {
        y.shuffle(rng);
        return;
    }
    for g in groups {
        scratch.clear();
        scratch.extend(g.iter().map(|&i| y[i]));
        scratch.shuffle(rng);
        g.iter().zip(scratch.iter()).for_each(|(&i, &v)| y[i] = v);
    }
}

fn batches(draws: u64, batch_size: usize) -> Vec<(u64, usize)> {
    let b = batch_size as u64;
    (0..draws.div_ceil(b)).map(|i| (i, (draws - i * b).min(b) as usize)).collect()
}

/// Monte Carlo p-values for feature `feature` of a run seeded with `seed`.
///
/// Estimates use `(c + 1) / (B + 1)`. The stream depends only on the seed,
/// the feature index and the batch index, so results do not depend on the
/// number of worker threads.
pub fn monte_carlo_feature<T: Real>(
    x: &[T],
    y: &[T],
    draws: u64,
    seed: u64,
    feature: u64,
    strata: Option<&StrataAssignment>,
) -> Result<OracleResult> {
    if draws == 0 {
        return Err(Error::InvalidArgument("at least one draw is required".into()));
    }
    let p = prepare(x, y, strata)?;
    let tallies: Vec<Tally> = batches(draws, BATCH_SIZE)
        .into_par_iter()
        .map(|(batch, len)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, feature, batch));
            let mut yp = p.y.clone();
            let mut scratch = Vec::new();
            let mut t = Tally::default();
            for _ in 0..len {
                shuffle_within(&mut yp, &p.groups, &mut scratch, &mut rng);
                let r: f64 = p.x.iter().zip(&yp).map(|(a, b)| a * b).sum();
                t.add(r, p.r_obs, 1.0);
            }
            t
        })
        .collect();
    let total = tallies.iter().fold(Tally::default(), |acc, t| acc.merge(t));
    Ok(finish(p.r_obs, &total, false))
}

/// Monte Carlo p-values with `B = draws` permutations.
pub fn monte_carlo_pvalues<T: Real>(
    x: &[T],
    y: &[T],
    draws: u64,
    seed: u64,
    strata: Option<&StrataAssignment>,
) -> Result<OracleResult> {
    monte_carlo_feature(x, y, draws, seed, 0, strata)
}

/// Monte Carlo p-values for every row, sharing the same permutations across rows.
///
/// Each batch of permuted responses forms an `n × b` matrix, and one matrix
/// product gives the statistics of all rows at once.
pub fn monte_carlo_matrix<T: Real>(
    x: &FeatureMatrix<T>,
    y: &ResponseVector<T>,
    draws: u64,
    seed: u64,
) -> Result<Vec<Result<OracleResult>>> {
    if draws == 0 {
        return Err(Error::InvalidArgument("at least one draw is required".into()));
    }
    let (m, n) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("feature matrix has {n} samples, response has {}", y.len())));
    }
    let py = prepare(y.values(), y.values(), None)?;
    let mut rows = Array2::<f64>::zeros((m, n));
    let mut r_obs = vec![0.0; m];
    let mut ok = vec![true; m];
    for i in 0..m {
        let row: Vec<T> = x.row(i).to_vec();
        ok[i] = crate::model::has_variation(&row);
        let p = prepare(&row, y.values(), None)?;
        rows.row_mut(i).assign(&ndarray::ArrayView1::from(&p.x));
        r_obs[i] = p.r_obs;
    }
    let tallies: Vec<Vec<Tally>> = batches(draws, BATCH_SIZE)
        .into_par_iter()
        .map(|(batch, len)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, batch));
            let mut yp = py.y.clone();
            let mut perms = Array2::<f64>::zeros((n, len));
            for j in 0..len {
                yp.shuffle(&mut rng);
                perms.column_mut(j).assign(&ndarray::ArrayView1::from(&yp));
            }
            let stats = rows.dot(&perms);
            (0..m)
                .map(|i| {
                    let mut t = Tally::default();
                    stats.row(i).iter().for_each(|&r| t.add(r, r_obs[i], 1.0));
                    t
                })
                .collect()
        })
        .collect();
    Ok((0..m)
        .map(|i| {
            if !ok[i] {
                return Err(Error::Degenerate("feature has fewer than two distinct values".into()));
            }
            let total = tallies.iter().fold(Tally::default(), |acc, t| acc.merge(&t[i]));
            Ok(finish(r_obs[i], &total, false))
        })
        .collect())
}

/// Monte Carlo moment estimates with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    pub estimate: MomentSummary<f64>,
    pub standard_error: MomentSummary<f64>,
    pub draws: u64,
}

const MOMENT_BATCHES: u64 = 20;

/// Sample moments of the permuted statistic over `draws` permutations.
pub fn empirical_moments<T: Real>(x: &[T], y: &[T], draws: u64, seed: u64) -> Result<EmpiricalMoments> {
    if draws < 1000 {
        return Err(Error::InvalidArgument(format!("at least 1000 draws are required, got {draws}")));
    }
    let p = prepare(x, y, None)?;
    let per = draws / MOMENT_BATCHES;
    let tallies: Vec<Tally> = (0..MOMENT_BATCHES)
        .into_par_iter()
        .map(|batch| {
            let len = if batch + 1 == MOMENT_BATCHES { draws - per * (MOMENT_BATCHES - 1) } else { per };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, batch));
            let mut yp = p.y.clone();
            let mut t = Tally::default();
            for _ in 0..len {
                yp.shuffle(&mut rng);
                t.add(p.x.iter().zip(&yp).map(|(a, b)| a * b).sum(), p.r_obs, 1.0);
            }
            t
        })
        .collect();
    let estimate = tallies.iter().fold(Tally::default(), |acc, t| acc.merge(t)).moments();
    let parts: Vec<MomentSummary<f64>> = tallies.iter().map(Tally::moments).collect();
    let k = parts.len() as f64;
    let se = |f: fn(&MomentSummary<f64>) -> f64| {
        let mean = parts.iter().map(f).sum::<f64>() / k;
        (parts.iter().map(|m| (f(m) - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    };
    Ok(EmpiricalMoments {
        estimate,
        standard_error: MomentSummary {
            mean: se(|m| m.mean),
            variance: se(|m| m.variance),
            skewness: se(|m| m.skewness),
            excess_kurtosis: se(|m| m.excess_kurtosis),
        },
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lehmann(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x = (0..a.len() + b.len()).map(|i| if i < a.len() { 1.0 } else { 0.0 }).collect();
        (x, a.iter().chain(b).copied().collect())
    }

    #[test]
    fn hand_enumerated_three_samples() {
        let v = [1.0, 2.0, 3.0];
        let r = exhaustive_pvalues(&v, &v, None).unwrap();
        assert!((r.p_right - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.p_left, 1.0);
        assert_eq!(r.draws, 6);
        assert!((r.mid_p_right - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn lehmann_tables() {
        let (x, y) = lehmann(&[6.8, 3.1, 5.8, 4.5, 3.3, 4.7, 4.2, 4.9], &[4.4, 2.5, 2.8, 2.1, 6.6, 0.0, 4.8, 2.3]);
        let r = exhaustive_pvalues(&x, &y, None).unwrap();
        assert_eq!(r.draws, 12870);
        assert!((r.p_double - 0.101).abs() < 0.001, "{r:?}");
        let (x, y) = lehmann(
            &[17.9, 13.3, 10.6, 7.6, 5.7, 5.6, 5.4, 3.3, 3.1, 0.9],
            &[7.7, 5.0, 1.7, 0.0, -3.0, -3.1, -10.5],
        );
        let r = exhaustive_pvalues(&x, &y, None).unwrap();
        assert_eq!(r.draws, 19448);
        assert!((r.p_double - 0.0118).abs() < 0.0005, "{r:?}");
    }

    #[test]
    fn combinations_match_full_permutations() {
        let x = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let y = [0.3, 2.0, -1.0, 4.0, 0.5, 0.1, 1.7];
        let fast = exhaustive_pvalues(&x, &y, None).unwrap();
        let p = prepare(&x, &y, None).unwrap();
        let mut ys = p.y.clone();
        let mut tally = Tally::default();
        for_each_permutation(&mut ys, |perm| {
            tally.add(p.x.iter().zip(perm).map(|(a, b)| a * b).sum(), p.r_obs, 1.0);
        });
        assert_eq!(tally.weight, 5040.0);
        assert!((fast.p_left - tally.le / 5040.0).abs() < 1e-12);
        assert!((fast.p_right - tally.ge / 5040.0).abs() < 1e-12);
    }

    #[test]
    fn exact_moments_match_closed_form() {
        let x = [0.2, 1.4, 3.0, 0.1, 0.9, 2.2, 5.0];
        let y = [1.0, 0.0, 2.0, 4.0, 0.5, 0.5, 3.0];
        let r = exhaustive_pvalues(&x, &y, None).unwrap();
        let p = crate::model::ScaledPair::new(&x[..], &y[..]).unwrap();
        let m = crate::moments::unstratified_moments(&p).unwrap();
        assert!(r.moments.mean.abs() < 1e-12);
        assert!((r.moments.variance - m.variance).abs() < 1e-12);
        assert!((r.moments.skewness - m.skewness).abs() < 1e-9);
        assert!((r.moments.excess_kurtosis - m.excess_kurtosis).abs() < 1e-9);
    }

    #[test]
    fn too_large_enumeration_is_refused() {
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        assert!(matches!(exhaustive_pvalues(&x, &x, None), Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn stratified_enumeration_counts_products() {
        let x = [1.0, 2.0, 3.0, 4.0, 1.0, 5.0, 2.0];
        let y = [0.5, 0.1, 0.9, 0.3, 2.0, 1.0, 0.0];
        let strata = StrataAssignment::from_labels(&[1, 1, 1, 1, 2, 2, 2]).unwrap();
        let r = exhaustive_pvalues(&x, &y, Some(&strata)).unwrap();
        assert_eq!(r.draws, 24 * 6);
        assert!(r.moments.mean.abs() < 1e-12);
    }

    #[test]
    fn add_one_bounds_and_determinism() {
        let x = [0.2, 1.4, 3.0, 0.1, 0.9, 2.2, 5.0];
        let y = [1.0, 0.0, 2.0, 4.0, 0.5, 0.5, 3.0];
        let one = monte_carlo_pvalues(&x, &y, 1, 9, None).unwrap();
        for p in [one.p_left, one.p_right] {
            assert!(p == 0.5 || p == 1.0);
        }
        let a = monte_carlo_pvalues(&x, &y, 20_000, 42, None).unwrap();
        let b = monte_carlo_pvalues(&x, &y, 20_000, 42, None).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| monte_carlo_pvalues(&x, &y, 20_000, 42, None).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let x = [0.2, 1.4, 3.0, 0.1, 0.9, 2.2, 5.0];
        let y = [1.0, 0.0, 2.0, 4.0, 0.5, 0.5, 3.0];
        let exact = exhaustive_pvalues(&x, &y, None).unwrap();
        let mc = monte_carlo_pvalues(&x, &y, 100_000, 7, None).unwrap();
        assert!((exact.p_left - mc.p_left).abs() < 3.0 * mc.se_left);
        assert!((exact.p_right - mc.p_right).abs() < 3.0 * mc.se_right);
    }

    #[test]
    fn stratified_shuffle_stays_inside_strata() {
        let groups = vec![vec![0, 2, 4], vec![1, 3, 5, 6]];
        let mut y = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut scratch = Vec::new();
        for _ in 0..100 {
            shuffle_within(&mut y, &groups, &mut scratch, &mut rng);
            assert!(groups[0].iter().all(|&i| y[i] == 0.0));
            assert!(groups[1].iter().all(|&i| y[i] == 1.0));
        }
    }

    #[test]
    fn matrix_path_matches_single_rows_in_distribution() {
        let rows = vec![vec![0.2, 1.4, 3.0, 0.1, 0.9, 2.2, 5.0], vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]];
        let y = vec![1.0, 0.0, 2.0, 4.0, 0.5, 0.5, 3.0];
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let out = monte_carlo_matrix(&x, &ResponseVector::new(y.clone()).unwrap(), 50_000, 3).unwrap();
        let exact = exhaustive_pvalues(&rows[0], &y, None).unwrap();
        let mc = out[0].as_ref().unwrap();
        assert!((exact.p_right - mc.p_right).abs() < 4.0 * mc.se_right);
        assert!(out[1].is_err());
    }

    #[test]
    fn empirical_moments_track_exact_values() {
        let x: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64).collect();
        let y: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).exp()).collect();
        let e = empirical_moments(&x, &y, 200_000, 5).unwrap();
        assert!((e.estimate.variance - 1.0 / 19.0).abs() < 3.0 * e.standard_error.variance);
        let constant = empirical_moments(&x, &[2.0; 20], 1000, 5).unwrap();
        assert_eq!(constant.estimate.variance, 0.0);
        assert!(empirical_moments(&x, &y, 10, 5).is_err());
    }
}
