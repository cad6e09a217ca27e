//! Confidence intervals for a trend coefficient by inverting permutation tests.
//!
//! For a candidate slope `β` the data `(x, y − βx)` are tested for trend. The
//! lower bound is where the right tail reaches `(1 − level)/2`, the upper
//! bound where the left tail does.

use crate::density::fit_density;
use crate::engine::NullDistribution;
use crate::error::{Error, Result};
use crate::model::{has_variation, ScaledPair};
use crate::moments::unstratified_moments;
use crate::oracle::exhaustive_pvalues;
use crate::referent::{referent_mixture, select_referent};
use crate::scalar::Real;

/// Absolute tolerance of each bound.
pub const BOUND_TOLERANCE: f64 = 1e-4;

const MAX_EXPANSIONS: usize = 60;
const MONOTONE_CHECKS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Mcc,
    Mcc1,
    Exhaustive,
}

impl CiMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CiMethod::Mcc => "mcc",
            CiMethod::Mcc1 => "mcc1",
            CiMethod::Exhaustive => "exhaustive",
        }
    }
}

/// Which null distribution a candidate slope is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentPolicy {
    /// Fit once to the observed data and reuse it for every candidate.
    #[default]
    Observed,
    /// Refit to the moments of `(x, y − βx)` at each candidate.
    PerCandidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: CiMethod,
    /// Least-squares slope; the mean difference when `x` is a 0/1 indicator.
    pub estimate: f64,
    pub warnings: Vec<String>,
}

/// Centered sums shared by every candidate.
struct Sums {
    sxx: f64,
    sxy: f64,
    syy: f64,
}

impl Sums {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            let (u, v) = (a - mx, b - my);
            sxx += u * u;
            sxy += u * v;
            syy += v * v;
        }
        Self { sxx, sxy, syy }
    }

    /// Correlation of `x` with `y − βx`.
    fn r(&self, beta: f64) -> f64 {
        let num = self.sxy - beta * self.sxx;
        let ss = (self.syy - 2.0 * beta * self.sxy + beta * beta * self.sxx).max(0.0);
        if ss == 0.0 {
            return 0.0;
        }
        (num / (self.sxx * ss).sqrt()).clamp(-1.0, 1.0)
    }
}

/// `(p_left, p_right)` as a function of the candidate slope.
type TailFn<'a> = Box<dyn Fn(f64) -> Result<(f64, f64)> + 'a>;

fn tail_function<'a>(x: &'a [f64], y: &'a [f64], sums: &'a Sums, method: CiMethod, policy: MomentPolicy) -> Result<TailFn<'a>> {
    let shifted = move |beta: f64| -> Vec<f64> { y.iter().zip(x).map(|(b, a)| b - beta * a).collect() };
    Ok(match (method, policy) {
        (CiMethod::Exhaustive, _) => Box::new(move |beta| {
            let o = exhaustive_pvalues(x, &shifted(beta), None)?;
            Ok((o.p_left, o.p_right))
        }),
        (CiMethod::Mcc, MomentPolicy::Observed) => {
            let fit = fit_density(&unstratified_moments(&ScaledPair::new(x, y)?)?);
            Box::new(move |beta| Ok(fit.tail_probs(sums.r(beta))))
        }
        (CiMethod::Mcc, MomentPolicy::PerCandidate) => Box::new(move |beta| {
            let fit = fit_density(&unstratified_moments(&ScaledPair::new(x, &shifted(beta))?)?);
            Ok(fit.tail_probs(sums.r(beta)))
        }),
        (CiMethod::Mcc1, MomentPolicy::Observed) => {
            let mix = referent_mixture(&ScaledPair::new(x, y)?.swapped(), select_referent(y))?;
            Box::new(move |beta| Ok(mix.tail_probs(sums.r(beta))))
        }
        (CiMethod::Mcc1, MomentPolicy::PerCandidate) => Box::new(move |beta| {
            let ys = shifted(beta);
            let mix = referent_mixture(&ScaledPair::new(x, &ys)?.swapped(), select_referent(&ys))?;
            Ok(mix.tail_probs(sums.r(beta)))
        }),
    })
}

/// Finds where `g` crosses `target`, given `g(inside) > target` and a step
/// direction pointing away from the estimate.
fn find_bound(g: &dyn Fn(f64) -> Result<f64>, target: f64, inside: f64, step: f64, warnings: &mut Vec<String>) -> Result<f64> {
    let mut width = step;
    let mut outside = inside + width;
    let mut expansions = 0;
    while g(outside)? > target {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Precondition("confidence bound not bracketed; the tail never reaches the target".into()));
        }
        width *= 2.0;
        outside = inside + width;
    }
    if expansions > 0 {
        log::debug!("bracket widened {expansions} times");
    }
    let (mut a, mut b) = (inside, outside);
    while (b - a).abs() > BOUND_TOLERANCE {
        let mid = 0.5 * (a + b);
        if g(mid)? > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    // Spot-check monotonicity across the bracket.
    let mut last = g(inside)?;
    for i in 1..=MONOTONE_CHECKS {
        let v = g(inside + (outside - inside) * i as f64 / MONOTONE_CHECKS as f64)?;
        if v > last + 1e-9 {
            warnings.push(format!("tail probability is not monotone near {:.4}; bound may not be unique", 0.5 * (a + b)));
            break;
        }
        last = v;
    }
    Ok(0.5 * (a + b))
}

/// Confidence interval for the slope of `y` on `x`.
pub fn mcc_ci_with<T: Real>(x: &[T], y: &[T], level: f64, method: CiMethod, policy: MomentPolicy) -> Result<ConfidenceInterval> {
    if !(level > 0.5 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0.5, 1), got {level}")));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: n });
    }
    if !has_variation(x) {
        return Err(Error::Degenerate("x has fewer than two distinct values".into()));
    }
    let x: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let y: Vec<f64> = y.iter().map(|v| v.as_f64()).collect();
    let sums = Sums::new(&x, &y);
    let estimate = sums.sxy / sums.sxx;
    let rss = (sums.syy - estimate * sums.sxy).max(0.0);
    let se = (rss / (n as f64 - 2.0) / sums.sxx).sqrt();
    let step = 10.0 * if se > 0.0 { se } else { 1.0 };
    let tails = tail_function(&x, &y, &sums, method, policy)?;
    let target = 0.5 * (1.0 - level);
    let mut warnings = Vec::new();
    let right = |b: f64| tails(b).map(|t| t.1);
    let left = |b: f64| tails(b).map(|t| t.0);
    let lower = find_bound(&right, target, estimate, -step, &mut warnings)?;
    let upper = find_bound(&left, target, estimate, step, &mut warnings)?;
    Ok(ConfidenceInterval { level, lower, upper, method, estimate, warnings })
}

/// Confidence interval using the observed-data fit for MCC methods.
pub fn mcc_ci<T: Real>(x: &[T], y: &[T], level: f64, method: CiMethod) -> Result<ConfidenceInterval> {
    mcc_ci_with(x, y, level, method, MomentPolicy::Observed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{mcc_row, AnalysisConfig};

    fn table1() -> (Vec<f64>, Vec<f64>) {
        let a = [6.8, 3.1, 5.8, 4.5, 3.3, 4.7, 4.2, 4.9];
        let b = [4.4, 2.5, 2.8, 2.1, 6.6, 0.0, 4.8, 2.3];
        let x = (0..16).map(|i| if i < 8 { 1.0 } else { 0.0 }).collect();
        (x, a.iter().chain(&b).copied().collect())
    }

    #[test]
    fn lehmann_table_one_intervals() {
        let (x, y) = table1();
        for (level, lo, hi) in [(0.95, -0.31, 3.26), (0.975, -0.61, 3.56)] {
            let ci = mcc_ci(&x, &y, level, CiMethod::Mcc).unwrap();
            assert!((ci.lower - lo).abs() < 0.03 && (ci.upper - hi).abs() < 0.03, "{ci:?}");
            assert!(ci.lower <= ci.estimate && ci.estimate <= ci.upper);
            assert!((ci.estimate - 1.475).abs() < 1e-12);
        }
    }

    #[test]
    fn duality_with_doubled_p() {
        let (x, y) = table1();
        let p = mcc_row(&x, &y, &AnalysisConfig::default()).unwrap();
        for level in [0.85, 0.9, 0.95] {
            let ci = mcc_ci(&x, &y, level, CiMethod::Mcc).unwrap();
            let excludes_zero = ci.lower > 0.0 || ci.upper < 0.0;
            assert_eq!(excludes_zero, p.p_double < 1.0 - level, "level {level}: {ci:?} p {}", p.p_double);
        }
    }

    #[test]
    fn nesting_and_shift() {
        let (x, y) = table1();
        let a = mcc_ci(&x, &y, 0.9, CiMethod::Mcc).unwrap();
        let b = mcc_ci(&x, &y, 0.95, CiMethod::Mcc).unwrap();
        assert!(b.lower <= a.lower && a.upper <= b.upper);
        let shifted: Vec<f64> = y.iter().map(|v| v + 100.0).collect();
        let c = mcc_ci(&x, &shifted, 0.9, CiMethod::Mcc).unwrap();
        assert!((a.lower - c.lower).abs() < 2e-4 && (a.upper - c.upper).abs() < 2e-4);
    }

    #[test]
    fn exhaustive_and_refined_methods() {
        let (x, y) = table1();
        let ex = mcc_ci(&x, &y, 0.95, CiMethod::Exhaustive).unwrap();
        assert!(ex.lower < 0.0 && ex.upper > 3.0, "{ex:?}");
        let one = mcc_ci(&x, &y, 0.95, CiMethod::Mcc1).unwrap();
        assert!((one.lower - ex.lower).abs() < 0.2 && (one.upper - ex.upper).abs() < 0.2, "{one:?} {ex:?}");
        let per = mcc_ci_with(&x, &y, 0.95, CiMethod::Mcc, MomentPolicy::PerCandidate).unwrap();
        assert!(per.lower < per.estimate && per.upper > per.estimate);
    }

    #[test]
    fn rejects_bad_arguments() {
        let (x, y) = table1();
        assert!(mcc_ci(&x, &y, 0.4, CiMethod::Mcc).is_err());
        assert!(mcc_ci(&[1.0; 16], &y, 0.95, CiMethod::Mcc).is_err());
    }
}
