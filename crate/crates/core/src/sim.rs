//! Simulation studies: null calibration, power of the doubled p-value, the
//! ordering conditions under a beta approximation, and timing.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Binomial, ChiSquared, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use crate::covariates::{stratified_mcc_report, CovariateMatrix};
use crate::density::standard_r_pvalues;
use crate::engine::{mcc_matrix, mcc_row_report, AnalysisConfig};
use crate::error::{Error, Result};
use crate::model::{FeatureMatrix, ResponseVector, StrataAssignment};
use crate::oracle::derive_seed;
use crate::special::{beta_quantile, beta_reg, bisect_increasing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    /// Half zeros, half chi-square(1); binary response.
    I,
    /// Mid-ranks of a zero / 3.0 / chi-square mixture; binary response.
    Ii,
    /// Genotype-like counts against a binary response.
    Iii,
    /// Continuous data with two fitted covariates.
    Iv,
    /// Counts with a binary stratifying covariate.
    V,
    /// Normal `x`, exponential noise: `y = βx + ε`.
    PowerA,
    /// Exponential `x`, exponential noise: `y = βx + ε`.
    PowerB,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 7] =
        [ScenarioId::I, ScenarioId::Ii, ScenarioId::Iii, ScenarioId::Iv, ScenarioId::V, ScenarioId::PowerA, ScenarioId::PowerB];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::I => "i",
            ScenarioId::Ii => "ii",
            ScenarioId::Iii => "iii",
            ScenarioId::Iv => "iv",
            ScenarioId::V => "v",
            ScenarioId::PowerA => "power-a",
            ScenarioId::PowerB => "power-b",
        }
    }

    pub fn is_power(self) -> bool {
        matches!(self, ScenarioId::PowerA | ScenarioId::PowerB)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub n: usize,
    pub seed: u64,
    /// Slope `β` for the power scenarios; must be zero otherwise.
    pub effect: f64,
}

impl ScenarioSpec {
    pub fn null(id: ScenarioId, n: usize, seed: u64) -> Self {
        Self { id, n, seed, effect: 0.0 }
    }
}

/// One simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Covariate columns to residualize on.
    pub covariates: Vec<Vec<f64>>,
    /// Stratum label per sample, starting at 1.
    pub strata: Option<Vec<usize>>,
}

/// Mid-ranks starting at 1; tied values share the average of their ranks.
pub fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        idx[i..=j].iter().for_each(|&k| ranks[k] = rank);
        i = j + 1;
    }
    ranks
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    if Bernoulli::new(p).expect("probability in range").sample(rng) {
        1.0
    } else {
        0.0
    }
}

fn binomial(rng: &mut ChaCha8Rng, trials: u64, p: f64) -> f64 {
    Binomial::new(trials, p).expect("probability in range").sample(rng) as f64
}

/// Draws one data set.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Dataset> {
    if spec.n < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: spec.n });
    }
    if !spec.id.is_power() && spec.effect != 0.0 {
        return Err(Error::InvalidArgument(format!("scenario {} is a null scenario", spec.id)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let chi = ChiSquared::new(1.0).expect("valid degrees of freedom");
    let mut data = Dataset { x: Vec::with_capacity(n), y: Vec::with_capacity(n), covariates: Vec::new(), strata: None };
    match spec.id {
        ScenarioId::I => {
            for _ in 0..n {
                let x = if rng.random::<f64>() < 0.5 { 0.0 } else { chi.sample(&mut rng) };
                data.x.push(x);
                data.y.push(bernoulli(&mut rng, 0.2));
            }
        }
        ScenarioId::Ii => {
            let mut raw = Vec::with_capacity(n);
            for _ in 0..n {
                let u = rng.random::<f64>();
                raw.push(if u < 0.2 {
                    0.0
                } else if u < 0.3 {
                    3.0
                } else {
                    chi.sample(&mut rng)
                });
                data.y.push(bernoulli(&mut rng, 0.2));
            }
            data.x = mid_ranks(&raw);
        }
        ScenarioId::Iii => {
            for _ in 0..n {
                data.x.push(binomial(&mut rng, 2, 0.1));
                data.y.push(bernoulli(&mut rng, 0.2));
            }
        }
        ScenarioId::Iv => {
            let (mut z1, mut z2) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..n {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = Exp1.sample(&mut rng);
                let ex: f64 = Exp1.sample(&mut rng);
                let ey: f64 = Exp1.sample(&mut rng);
                data.y.push(a + ey);
                data.x.push(2.0 * a + ex);
                z1.push(a);
                z2.push(b);
            }
            data.covariates = vec![z1, z2];
        }
        ScenarioId::V => {
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let z = bernoulli(&mut rng, 0.5);
                data.x.push(binomial(&mut rng, 2, 0.02 + 0.16 * z));
                data.y.push(bernoulli(&mut rng, 0.04 + 0.32 * z));
                labels.push(1 + z as usize);
            }
            data.strata = Some(labels);
        }
        ScenarioId::PowerA | ScenarioId::PowerB => {
            for _ in 0..n {
                let x: f64 = if spec.id == ScenarioId::PowerA { StandardNormal.sample(&mut rng) } else { Exp1.sample(&mut rng) };
                let e: f64 = Exp1.sample(&mut rng);
                data.x.push(x);
                data.y.push(spec.effect * x + e);
            }
        }
    }
    Ok(data)
}

/// Tail probabilities of one data set under MCC and the standard-r comparator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicatePValues {
    pub mcc_left: f64,
    pub mcc_right: f64,
    pub mcc_two: f64,
    pub mcc_double: f64,
    pub std_left: f64,
    pub std_right: f64,
}

/// Analyses a data set the way its scenario prescribes.
pub fn analyze(data: &Dataset, config: &AnalysisConfig) -> Result<ReplicatePValues> {
    let n = data.x.len();
    let (report, df_n) = if let Some(labels) = &data.strata {
        let strata = StrataAssignment::from_labels(labels)?;
        (stratified_mcc_report(&data.x, &data.y, &strata, config)?, n.saturating_sub(strata.num_strata() - 1))
    } else if !data.covariates.is_empty() {
        let z = CovariateMatrix::from_columns(&data.covariates)?;
        let x = z.residualize(&data.x)?;
        let y = z.residualize(&data.y)?;
        (mcc_row_report(&x, &y, config)?, n - data.covariates.len())
    } else {
        (mcc_row_report(&data.x, &data.y, config)?, n)
    };
    let p = report.pvalues;
    let (std_left, std_right) = standard_r_pvalues(p.r_obs, df_n)?;
    Ok(ReplicatePValues {
        mcc_left: p.p_left,
        mcc_right: p.p_right,
        mcc_two: p.p_two,
        mcc_double: p.p_double,
        std_left,
        std_right,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mcc,
    StandardR,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mcc => "mcc",
            Method::StandardR => "standard-r",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Left,
    Right,
}

impl Tail {
    pub fn as_str(self) -> &'static str {
        match self {
            Tail::Left => "left",
            Tail::Right => "right",
        }
    }
}

/// Number of blocks used for the spread of the log ratio.
pub const TYPE1_BLOCKS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Row {
    pub method: Method,
    pub tail: Tail,
    pub alpha: f64,
    pub rejections: u64,
    /// Empirical `Pr(p ≤ α)` for this tail.
    pub rate: f64,
    /// `log10(rate / α)`.
    pub log10_ratio: f64,
    /// Standard deviation of the log ratio across blocks, by the delta method;
    /// NaN when there were no rejections.
    pub log10_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Report {
    pub scenario: ScenarioId,
    pub n: usize,
    pub replications: usize,
    /// Replications whose data could not be analysed, such as a constant response.
    pub skipped: usize,
    pub rows: Vec<Type1Row>,
}

impl Type1Report {
    pub fn row(&self, method: Method, tail: Tail, alpha: f64) -> Option<&Type1Row> {
        self.rows.iter().find(|r| r.method == method && r.tail == tail && r.alpha == alpha)
    }
}

fn replicate_pvalues(spec: &ScenarioSpec, replications: usize, config: &AnalysisConfig) -> Result<Vec<Option<ReplicatePValues>>> {
    (0..replications)
        .into_par_iter()
        .map(|rep| {
            let s = ScenarioSpec { seed: derive_seed(spec.seed, rep as u64, 0), ..*spec };
            let data = generate_scenario(&s)?;
            match analyze(&data, config) {
                Ok(p) => Ok(Some(p)),
                Err(Error::Degenerate(_)) | Err(Error::RankDeficient { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Empirical per-tail type I error under the null.
pub fn type1_experiment(spec: &ScenarioSpec, replications: usize, alphas: &[f64]) -> Result<Type1Report> {
    if spec.effect != 0.0 {
        return Err(Error::InvalidArgument("type I experiments need a null effect".into()));
    }
    if replications < TYPE1_BLOCKS {
        return Err(Error::InvalidArgument(format!("at least {TYPE1_BLOCKS} replications are required")));
    }
    let results = replicate_pvalues(spec, replications, &AnalysisConfig::default())?;
    let valid: Vec<(usize, ReplicatePValues)> = results.iter().enumerate().filter_map(|(i, r)| r.map(|p| (i, p))).collect();
    let total = valid.len();
    let mut rows = Vec::new();
    for method in [Method::Mcc, Method::StandardR] {
        for tail in [Tail::Left, Tail::Right] {
            let pick = |p: &ReplicatePValues| match (method, tail) {
                (Method::Mcc, Tail::Left) => p.mcc_left,
                (Method::Mcc, Tail::Right) => p.mcc_right,
                (Method::StandardR, Tail::Left) => p.std_left,
                (Method::StandardR, Tail::Right) => p.std_right,
            };
            for &alpha in alphas {
                let mut block_hits = [0u64; TYPE1_BLOCKS];
                let mut block_sizes = [0u64; TYPE1_BLOCKS];
                for (i, p) in &valid {
                    let b = i % TYPE1_BLOCKS;
                    block_sizes[b] += 1;
                    if pick(p) <= alpha {
                        block_hits[b] += 1;
                    }
                }
                let rejections: u64 = block_hits.iter().sum();
                let rate = rejections as f64 / total.max(1) as f64;
                let rates: Vec<f64> =
                    block_hits.iter().zip(&block_sizes).map(|(&h, &s)| h as f64 / s.max(1) as f64).collect();
                let mean = rates.iter().sum::<f64>() / rates.len() as f64;
                let sd = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rates.len() - 1) as f64).sqrt();
                rows.push(Type1Row {
                    method,
                    tail,
                    alpha,
                    rejections,
                    rate,
                    log10_ratio: (rate / alpha).log10(),
                    log10_sd: if rejections == 0 { f64::NAN } else { sd / (rate * std::f64::consts::LN_10) },
                });
            }
        }
    }
    Ok(Type1Report { scenario: spec.id, n: spec.n, replications, skipped: replications - total, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    /// Magnitude of the slope; each row averages `+β` and `−β`.
    pub beta: f64,
    pub power_two: f64,
    pub power_double: f64,
    pub se_two: f64,
    pub se_double: f64,
}

/// Power of `p_two` and `p_double` at level `alpha` for each `|β|`.
///
/// `replications` counts data sets per `|β|`, split evenly between `+β` and `−β`.
pub fn power_experiment(spec: &ScenarioSpec, betas: &[f64], alpha: f64, replications: usize) -> Result<Vec<PowerRow>> {
    if !spec.id.is_power() {
        return Err(Error::InvalidArgument(format!("scenario {} has no slope", spec.id)));
    }
    if replications < 2 {
        return Err(Error::InvalidArgument("at least two replications are required".into()));
    }
    let per_sign = replications / 2;
    let config = AnalysisConfig::default();
    betas
        .iter()
        .enumerate()
        .map(|(bi, &beta)| {
            let (mut two, mut double, mut count) = (0u64, 0u64, 0u64);
            for (si, sign) in [1.0, -1.0].into_iter().enumerate() {
                let s = ScenarioSpec { effect: sign * beta.abs(), seed: derive_seed(spec.seed, bi as u64, si as u64), ..*spec };
                for p in replicate_pvalues(&s, per_sign, &config)?.into_iter().flatten() {
                    count += 1;
                    two += u64::from(p.mcc_two <= alpha);
                    double += u64::from(p.mcc_double <= alpha);
                }
            }
            let c = count.max(1) as f64;
            let (pt, pd) = (two as f64 / c, double as f64 / c);
            Ok(PowerRow {
                beta: beta.abs(),
                power_two: pt,
                power_double: pd,
                se_two: (pt * (1.0 - pt) / c).sqrt(),
                se_double: (pd * (1.0 - pd) / c).sqrt(),
            })
        })
        .collect()
}

/// Critical values and ordering conditions for a Beta(a1, a2) null on the `b` scale.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    /// Symmetric thresholds around the mean with total tail mass `α`.
    pub b_minus: f64,
    pub b_plus: f64,
    /// Equal-tailed quantiles `α/2` and `1 − α/2`.
    pub b_lower: f64,
    pub b_upper: f64,
    /// Left minus right side of the condition with the null shifted by `−δ`.
    pub condition1: f64,
    /// Left minus right side with the null shifted by `+δ`.
    pub condition2: f64,
    /// Region-1 mass minus region-2 mass under the two-point mixture alternative.
    pub region_difference: f64,
}

impl OrderingReport {
    pub fn condition1_holds(&self) -> bool {
        self.condition1 > 0.0
    }

    pub fn condition2_holds(&self) -> bool {
        self.condition2 > 0.0
    }

    pub fn region1_larger(&self) -> bool {
        self.region_difference > 0.0
    }
}

/// Evaluates the ordering conditions for shift `delta` on the `b` scale.
pub fn ordering_check(a1: f64, a2: f64, alpha: f64, delta: f64) -> Result<OrderingReport> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::InvalidArgument("beta parameters must be positive".into()));
    }
    let h = |b: f64| beta_reg(a1, a2, b).0;
    let mean = a1 / (a1 + a2);
    // Total mass beyond mean ± t decreases in t.
    let outside = |t: f64| h(mean - t) + beta_reg(a1, a2, mean + t).1;
    let reach = mean.max(1.0 - mean);
    let t = bisect_increasing(|t| -outside(t), -alpha, 0.0, reach);
    let (b_minus, b_plus) = (mean - t, mean + t);
    let b_lower = beta_quantile(a1, a2, alpha / 2.0);
    let b_upper = beta_quantile(a1, a2, 1.0 - alpha / 2.0);
    let side = |shift: f64| (h(b_lower + shift) - h(b_minus + shift)) - (h(b_upper + shift) - h(b_plus + shift));
    let condition1 = side(-delta);
    let condition2 = side(delta);
    Ok(OrderingReport {
        b_minus,
        b_plus,
        b_lower,
        b_upper,
        condition1,
        condition2,
        region_difference: 0.5 * (condition1 + condition2),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingCell {
    pub m: usize,
    pub n: usize,
    /// Median wall-clock seconds over the repeats.
    pub seconds: f64,
    /// Relative deviation from the fitted `time = β m n`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub cells: Vec<TimingCell>,
    /// Least-squares `β` in `time = β m n`.
    pub seconds_per_entry: f64,
}

impl TimingReport {
    pub fn seconds(&self, m: usize, n: usize) -> Option<f64> {
        self.cells.iter().find(|c| c.m == m && c.n == n).map(|c| c.seconds)
    }
}

/// Times the batch engine on exponential data for each `(m, n)` pair.
pub fn timing_benchmark(m_grid: &[usize], n_grid: &[usize], repeats: usize, seed: u64) -> Result<TimingReport> {
    if m_grid.iter().chain(n_grid).any(|v| !v.is_power_of_two()) {
        return Err(Error::InvalidArgument("grid sizes must be powers of two".into()));
    }
    let repeats = repeats.max(1);
    let config = AnalysisConfig::default();
    let mut cells = Vec::new();
    for &n in n_grid {
        for &m in m_grid {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, m as u64, n as u64));
            let values = Array2::from_shape_simple_fn((m, n), || Exp1.sample(&mut rng));
            let y: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let x = FeatureMatrix::new(values, (0..m).map(|i| format!("f{i}")).collect())?;
            let y = ResponseVector::new(y)?;
            let mut times: Vec<f64> = (0..repeats)
                .map(|_| {
                    let start = Instant::now();
                    let out = mcc_matrix(&x, &y, &config);
                    let elapsed = start.elapsed().as_secs_f64();
                    std::hint::black_box(out).map(|_| elapsed)
                })
                .collect::<Result<_>>()?;
            times.sort_by(f64::total_cmp);
            cells.push(TimingCell { m, n, seconds: times[times.len() / 2], deviation: 0.0 });
        }
    }
    let (num, den) = cells.iter().fold((0.0, 0.0), |(a, b), c| {
        let mn = (c.m * c.n) as f64;
        (a + mn * c.seconds, b + mn * mn)
    });
    let beta = num / den;
    for c in &mut cells {
        let fit = beta * (c.m * c.n) as f64;
        c.deviation = (c.seconds - fit) / fit;
    }
    Ok(TimingReport { cells, seconds_per_entry: beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mid_ranks_average_ties() {
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(mid_ranks(&[0.0, 0.0, 0.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn scenario_three_marginals() {
        let d = generate_scenario(&ScenarioSpec::null(ScenarioId::Iii, 500, 1)).unwrap();
        assert!(d.x.iter().all(|&v| v == 0.0 || v == 1.0 || v == 2.0));
        assert!(d.y.iter().all(|&v| v == 0.0 || v == 1.0));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&d.x) - 0.2).abs() < 0.06);
        assert!((mean(&d.y) - 0.2).abs() < 0.06);
    }

    #[test]
    fn scenario_four_correlation() {
        let d = generate_scenario(&ScenarioSpec::null(ScenarioId::Iv, 20_000, 2)).unwrap();
        let p = crate::model::ScaledPair::new(&d.x, &d.covariates[0]).unwrap();
        let r = crate::model::trend_statistic(&p);
        assert!((r - 2.0 / 5f64.sqrt()).abs() < 0.02, "{r}");
    }

    #[test]
    fn generators_are_seed_deterministic() {
        for id in ScenarioId::ALL {
            let spec = ScenarioSpec { id, n: 50, seed: 9, effect: if id.is_power() { 0.5 } else { 0.0 } };
            assert_eq!(generate_scenario(&spec).unwrap(), generate_scenario(&spec).unwrap());
        }
        assert!(generate_scenario(&ScenarioSpec { id: ScenarioId::I, n: 50, seed: 1, effect: 1.0 }).is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for id in ScenarioId::ALL {
            assert_eq!(id.as_str().parse::<ScenarioId>().unwrap(), id);
        }
        assert!("vi".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn symmetric_beta_has_no_ordering_gap() {
        let r = ordering_check(4.0, 4.0, 0.05, 0.02).unwrap();
        assert!((r.b_minus - r.b_lower).abs() < 1e-9);
        assert!(r.condition1.abs() < 1e-9 && r.condition2.abs() < 1e-9);
    }

    #[test]
    fn zero_shift_gives_zero_difference() {
        let r = ordering_check(5.0, 20.0, 0.05, 0.0).unwrap();
        assert!(r.condition1.abs() < 1e-12 && r.condition2.abs() < 1e-12);
    }

    #[test]
    fn null_power_is_near_alpha() {
        let spec = ScenarioSpec { id: ScenarioId::PowerB, n: 50, seed: 4, effect: 0.0 };
        let rows = power_experiment(&spec, &[0.0], 0.05, 4000).unwrap();
        assert!((rows[0].power_double - 0.05).abs() < 4.0 * rows[0].se_double + 0.005, "{rows:?}");
    }

    #[test]
    fn timing_grid_validation() {
        assert!(timing_benchmark(&[3], &[8], 1, 0).is_err());
        let r = timing_benchmark(&[16, 32], &[64], 1, 0).unwrap();
        assert_eq!(r.cells.len(), 2);
        assert!(r.seconds_per_entry > 0.0);
    }
}
