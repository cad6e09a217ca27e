//! Four-moment density approximations to the permutation distribution.
//!
//! The primary family is a beta density rescaled to mean zero and the target
//! variance. When no beta matches the requested skewness and kurtosis, a
//! gamma density matched on skewness, shifted to mean zero and reflected for
//! negative skew, is used instead.

use crate::error::{Error, Result};
use crate::moments::MomentSummary;
use crate::scalar::Real;
use crate::special::{beta_reg, bisect_increasing, gamma_reg, ln_beta, ln_gamma, normal_cdf, normal_pdf};

/// Beyond this shape the gamma tails use the Wilson-Hilferty transform.
const WILSON_HILFERTY_SHAPE: f64 = 1e8;

/// Which family a [`DensityFit`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityKind {
    RescaledBeta,
    ShiftedGamma,
    /// Limit of both families at zero skewness with non-negative excess kurtosis.
    Normal,
    /// Equal-weight mixture of conditional fits.
    Mixture,
}

impl DensityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityKind::RescaledBeta => "beta",
            DensityKind::ShiftedGamma => "gamma",
            DensityKind::Normal => "normal",
            DensityKind::Mixture => "mixture",
        }
    }
}

impl std::fmt::Display for DensityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted density on the statistic's scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityFit<T> {
    /// `r = location + scale · B` with `B ~ Beta(alpha, beta)`.
    RescaledBeta { alpha: T, beta: T, location: T, scale: T },
    /// `r = ±scale · (G − shape)` with `G ~ Gamma(shape, 1)`; negative sign when reflected.
    ShiftedGamma { shape: T, scale: T, reflected: bool },
    Normal { sd: T },
}

/// Mean, variance, skewness and excess kurtosis of Beta(a, b).
pub fn beta_moments<T: Real>(a: T, b: T) -> (T, T, T, T) {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let s = a + b;
    let mean = a / s;
    let var = a * b / (s * s * (s + T::one()));
    let skew = two * (b - a) * (s + T::one()).sqrt() / ((s + two) * (a * b).sqrt());
    let kurt = T::lit(6.0) * ((a - b) * (a - b) * (s + T::one()) - a * b * (s + two)) / (a * b * (s + two) * (s + three));
    (mean, var, skew, kurt)
}

/// Both printed roots for each beta parameter.
#[derive(Debug, Clone, Copy)]
struct BetaRoots<T> {
    alpha: [T; 2],
    beta: [T; 2],
}

/// Closed-form inverse of the beta skewness/kurtosis map.
///
/// The shared radicand is `−1 / (−k²s² + 32k² − 84ks² + 96k + 36s⁴ − 180s²)`.
fn beta_roots<T: Real>(s: T, k: T) -> Option<BetaRoots<T>> {
    let c = T::lit;
    let s2 = s * s;
    let den = -k * k * s2 + c(32.0) * k * k - c(84.0) * k * s2 + c(96.0) * k + c(36.0) * s2 * s2 - c(180.0) * s2;
    let radicand = -T::one() / den;
    let d = c(2.0) * k - c(3.0) * s2;
    if !(radicand >= T::zero()) || !radicand.is_finite() || d == T::zero() {
        return None;
    }
    let q = radicand.sqrt();
    // 36sq − 18s³q + 3k²sq − 3ks³q + 24ksq
    let t = s * q * (c(36.0) - c(18.0) * s2 + c(3.0) * k * k - c(3.0) * k * s2 + c(24.0) * k);
    let base = c(3.0) * k - c(3.0) * s2 + c(6.0);
    let offset = (-c(6.0) * s2 + c(6.0) * k + c(12.0)) / d;
    Some(BetaRoots {
        alpha: [(base + t) / d - offset, (base - t) / d - offset],
        beta: [-(base + t) / d, -(base - t) / d],
    })
}

fn reproduces<T: Real>(a: T, b: T, s: T, k: T) -> bool {
    if !(a > T::zero() && b > T::zero()) {
        return false;
    }
    let (_, _, bs, bk) = beta_moments(a, b);
    let tol = T::lit(1e-6);
    (bs - s).abs() <= tol * (T::one() + s.abs()) && (bk - k).abs() <= tol * (T::one() + k.abs())
}

/// Beta parameters `(alpha, beta)` with skewness `s` and excess kurtosis `k`.
///
/// The first root of each parameter is used unless it is negative, in which
/// case the alternate root is taken. The result is checked by recomputing the
/// beta moments; `Error::NoRealSolution` signals that no beta matches.
pub fn solve_beta_params<T: Real>(s: T, k: T) -> Result<(T, T)> {
    let fail = || Error::NoRealSolution { skewness: s.as_f64(), kurtosis: k.as_f64() };
    let roots = beta_roots(s, k).ok_or_else(fail)?;
    let pick = |r: [T; 2]| if r[0] < T::zero() { r[1] } else { r[0] };
    let (a, b) = (pick(roots.alpha), pick(roots.beta));
    if roots.alpha.iter().all(|&v| v > T::zero()) && roots.alpha[0] != roots.alpha[1] {
        log::debug!("both alpha roots admissible for s={s}, k={k}: {:?}; using the first", roots.alpha);
    }
    if reproduces(a, b, s, k) {
        return Ok((a, b));
    }
    // The branch rule can pair roots from different solutions; fall back to
    // the consistent pairs before giving up.
    for i in 0..2 {
        let (a, b) = (roots.alpha[i], roots.beta[i]);
        if reproduces(a, b, s, k) {
            log::debug!("branch rule mismatch for s={s}, k={k}; using root pair {i}");
            return Ok((a, b));
        }
    }
    Err(fail())
}

/// Gamma fit matching skewness exactly, shifted to mean zero with the target variance.
pub fn fit_shifted_gamma<T: Real>(s: T, k: T, variance: T) -> Result<DensityFit<T>> {
    if s == T::zero() || !s.is_finite() {
        return Err(Error::Precondition("shifted gamma needs nonzero skewness".into()));
    }
    if !(variance > T::zero()) {
        return Err(Error::Precondition("variance must be positive".into()));
    }
    let shape = T::lit(4.0) / (s * s);
    let implied = T::lit(1.5) * s * s;
    if (implied - k).abs() > T::lit(1e-6) * (T::one() + k.abs()) {
        log::debug!("shifted gamma matches skewness {s}; implied excess kurtosis {implied} differs from {k}");
    }
    Ok(DensityFit::ShiftedGamma { shape, scale: (variance / shape).sqrt(), reflected: s < T::zero() })
}

/// Fits a density with mean zero and the moments in `m`.
pub fn fit_density<T: Real>(m: &MomentSummary<T>) -> DensityFit<T> {
    let sd = m.variance.sqrt();
    match solve_beta_params(m.skewness, m.excess_kurtosis) {
        Ok((alpha, beta)) => {
            let (mean_b, var_b, _, _) = beta_moments(alpha, beta);
            let scale = sd / var_b.sqrt();
            DensityFit::RescaledBeta { alpha, beta, location: -mean_b * scale, scale }
        }
        Err(_) if m.skewness != T::zero() => {
            fit_shifted_gamma(m.skewness, m.excess_kurtosis, m.variance).expect("nonzero skewness and positive variance")
        }
        Err(_) => DensityFit::Normal { sd },
    }
}

impl<T: Real> DensityFit<T> {
    pub fn kind(&self) -> DensityKind {
        match self {
            DensityFit::RescaledBeta { .. } => DensityKind::RescaledBeta,
            DensityFit::ShiftedGamma { .. } => DensityKind::ShiftedGamma,
            DensityFit::Normal { .. } => DensityKind::Normal,
        }
    }

    /// Location of the gamma fit, `−scale · shape` before any reflection.
    pub fn shift(&self) -> Option<T> {
        match *self {
            DensityFit::ShiftedGamma { shape, scale, .. } => Some(-scale * shape),
            _ => None,
        }
    }

    /// Support interval on the statistic's scale.
    pub fn support(&self) -> (T, T) {
        match *self {
            DensityFit::RescaledBeta { location, scale, .. } => (location, location + scale),
            DensityFit::ShiftedGamma { shape, scale, reflected } => {
                let edge = -scale * shape;
                if reflected {
                    (T::neg_infinity(), -edge)
                } else {
                    (edge, T::infinity())
                }
            }
            DensityFit::Normal { .. } => (T::neg_infinity(), T::infinity()),
        }
    }

    pub fn mean(&self) -> T {
        T::zero()
    }

    pub fn variance(&self) -> T {
        match *self {
            DensityFit::RescaledBeta { alpha, beta, scale, .. } => beta_moments(alpha, beta).1 * scale * scale,
            DensityFit::ShiftedGamma { shape, scale, .. } => shape * scale * scale,
            DensityFit::Normal { sd } => sd * sd,
        }
    }

    /// `(Pr(R ≤ r), Pr(R ≥ r))`.
    pub fn tail_probs(&self, r: T) -> (T, T) {
        match *self {
            DensityFit::RescaledBeta { alpha, beta, location, scale } => beta_reg(alpha, beta, (r - location) / scale),
            DensityFit::ShiftedGamma { shape, scale, reflected } => {
                let z = if reflected { shape - r / scale } else { r / scale + shape };
                let (lower, upper) = gamma_tails(shape, z);
                if reflected {
                    (upper, lower)
                } else {
                    (lower, upper)
                }
            }
            DensityFit::Normal { sd } => normal_cdf(r / sd),
        }
    }

    pub fn pdf(&self, r: T) -> T {
        let one = T::one();
        match *self {
            DensityFit::RescaledBeta { alpha, beta, location, scale } => {
                let b = (r - location) / scale;
                if b <= T::zero() || b >= one {
                    return T::zero();
                }
                ((alpha - one) * b.ln() + (beta - one) * (-b).ln_1p() - ln_beta(alpha, beta)).exp() / scale
            }
            DensityFit::ShiftedGamma { shape, scale, reflected } => {
                let z = if reflected { shape - r / scale } else { r / scale + shape };
                if z <= T::zero() {
                    return T::zero();
                }
                ((shape - one) * z.ln() - z - ln_gamma(shape)).exp() / scale
            }
            DensityFit::Normal { sd } => normal_pdf(r / sd) / sd,
        }
    }

    /// Inverse of the lower tail probability.
    pub fn quantile(&self, p: T) -> T {
        let (mut lo, mut hi) = self.support();
        let spread = T::lit(60.0) * self.variance().sqrt();
        if lo.is_infinite() {
            lo = -spread;
            while self.tail_probs(lo).0 > p {
                lo = lo * T::lit(2.0);
            }
        }
        if hi.is_infinite() {
            hi = spread;
            while self.tail_probs(hi).0 < p {
                hi = hi * T::lit(2.0);
            }
        }
        bisect_increasing(|r| self.tail_probs(r).0, p, lo, hi)
    }
}

fn gamma_tails<T: Real>(shape: T, z: T) -> (T, T) {
    if shape > T::lit(WILSON_HILFERTY_SHAPE) {
        if z <= T::zero() {
            return (T::zero(), T::one());
        }
        let nine_a = T::lit(9.0) * shape;
        let w = ((z / shape).cbrt() - (T::one() - T::one() / nine_a)) / (T::one() / nine_a).sqrt();
        return normal_cdf(w);
    }
    gamma_reg(shape, z)
}

/// `(p_left, p_right)` of `r_obs` under `fit`.
pub fn tail_probs<T: Real>(fit: &DensityFit<T>, r_obs: T) -> (T, T) {
    fit.tail_probs(r_obs)
}

/// Null density of the sample correlation when either variable is normal:
/// `f(r) ∝ (1 − r²)^{(n−4)/2}` on `(−1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardRDensity {
    n: usize,
}

impl StandardRDensity {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: n });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pdf<T: Real>(&self, r: T) -> T {
        if r.abs() >= T::one() {
            return T::zero();
        }
        let half = T::lit(0.5);
        let b = half * T::from_count(self.n - 2);
        ((b - T::one()) * (T::one() - r * r).ln() - ln_beta(half, b)).exp()
    }

    /// `(Pr(R ≤ r), Pr(R ≥ r))`, using `r² ~ Beta(1/2, (n−2)/2)`.
    pub fn tail_probs<T: Real>(&self, r: T) -> (T, T) {
        let one = T::one();
        if r <= -one {
            return (T::zero(), one);
        }
        if r >= one {
            return (one, T::zero());
        }
        let half = T::lit(0.5);
        let (_, beyond) = beta_reg(half, half * T::from_count(self.n - 2), r * r);
        let far = half * beyond;
        if r >= T::zero() {
            (one - far, far)
        } else {
            (far, one - far)
        }
    }
}

/// Standard-r comparator tail probabilities.
pub fn standard_r_pvalues<T: Real>(r_obs: T, n: usize) -> Result<(T, T)> {
    if r_obs.abs() > T::one() + T::lit(1e-12) {
        return Err(Error::InvalidArgument(format!("|r| = {} exceeds one", r_obs)));
    }
    Ok(StandardRDensity::new(n)?.tail_probs(r_obs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(variance: f64, skewness: f64, excess_kurtosis: f64) -> MomentSummary<f64> {
        MomentSummary { mean: 0.0, variance, skewness, excess_kurtosis }
    }

    /// Composite Gauss-Legendre quadrature on [a, b].
    fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
        const W: [f64; 5] = [0.568_888_888_888_889, 0.478_628_670_499_366, 0.478_628_670_499_366, 0.236_926_885_056_189, 0.236_926_885_056_189];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let mid = a + (i as f64 + 0.5) * h;
                X.iter().zip(&W).map(|(x, w)| w * f(mid + x * h / 2.0)).sum::<f64>() * h / 2.0
            })
            .sum()
    }

    #[test]
    fn symmetric_beta_from_kurtosis() {
        let (a, b) = solve_beta_params(0.0f64, -1.0).unwrap();
        assert!((a - 1.5).abs() < 1e-12 && (b - 1.5).abs() < 1e-12);
    }

    #[test]
    fn round_trip_beta_5_20() {
        let (_, _, s, k) = beta_moments(5.0f64, 20.0);
        let (a, b) = solve_beta_params(s, k).unwrap();
        assert!((a - 5.0).abs() < 1e-8 && (b - 20.0).abs() < 1e-8);
        let (a, b) = solve_beta_params(-s, k).unwrap();
        assert!((a - 20.0).abs() < 1e-8 && (b - 5.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_region_has_no_solution() {
        assert!(matches!(solve_beta_params(2.5, 1.0), Err(Error::NoRealSolution { .. })));
        // Below the universal bound k ≥ s² − 2.
        assert!(solve_beta_params(1.0, -1.5).is_err());
    }

    #[test]
    fn gamma_examples() {
        let fit = fit_shifted_gamma(2.0f64, 6.0, 1.0).unwrap();
        match fit {
            DensityFit::ShiftedGamma { shape, scale, reflected } => {
                assert!((shape - 1.0).abs() < 1e-15 && (scale - 1.0).abs() < 1e-15 && !reflected);
            }
            _ => unreachable!(),
        }
        assert_eq!(fit.shift(), Some(-1.0));
        // Standard exponential shifted to mean zero.
        let (lo, up) = fit.tail_probs(1.0);
        assert!((up - (-2f64).exp()).abs() < 1e-15 && (lo + up - 1.0).abs() < 1e-15);

        let refl = fit_shifted_gamma(-2.0f64, 6.0, 1.0).unwrap();
        let (l2, u2) = refl.tail_probs(-1.0);
        assert!((l2 - up).abs() < 1e-15 && (u2 - lo).abs() < 1e-15);

        let g = fit_shifted_gamma(0.2f64, 0.0, 1.0 / 99.0).unwrap();
        match g {
            DensityFit::ShiftedGamma { shape, .. } => assert!((shape - 100.0).abs() < 1e-9),
            _ => unreachable!(),
        }
        assert!((g.variance() - 1.0 / 99.0).abs() < 1e-9);

        assert!(fit_shifted_gamma(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_skew_near_normal_fit() {
        let n = 400.0;
        let var = 1.0 / (n - 1.0);
        let fit = fit_density(&summary(var, 0.0, -6.0 / (n + 1.0)));
        assert_eq!(fit.kind(), DensityKind::RescaledBeta);
        let sd = var.sqrt();
        let mut worst = 0.0f64;
        for i in -400..=400 {
            let r = i as f64 / 100.0 * sd;
            let normal = normal_pdf(r / sd) / sd;
            worst = worst.max((fit.pdf(r) - normal).abs() * sd);
        }
        assert!(worst < 5e-3, "sup-norm gap {worst}");
    }

    #[test]
    fn leptokurtic_symmetric_falls_back_to_normal() {
        let fit = fit_density(&summary(0.01, 0.0, 0.5));
        assert_eq!(fit.kind(), DensityKind::Normal);
        assert_eq!(fit.tail_probs(0.0), (0.5, 0.5));
    }

    #[test]
    fn left_skew_maps_to_alpha_above_beta() {
        let fit = fit_density(&summary(0.01, -0.6, 0.5));
        match fit {
            DensityFit::RescaledBeta { alpha, beta, .. } => assert!(alpha > beta),
            _ => panic!("expected beta fit, got {fit:?}"),
        }
        let fit = fit_density(&summary(0.01, 0.6, 0.5));
        match fit {
            DensityFit::RescaledBeta { alpha, beta, .. } => assert!(alpha < beta),
            _ => panic!("expected beta fit, got {fit:?}"),
        }
    }

    #[test]
    fn highly_skewed_moments_use_gamma() {
        // Beyond the gamma line k = 1.5 s²: no beta has these moments.
        let fit = fit_density(&summary(0.01, 1.0, 4.0));
        assert_eq!(fit.kind(), DensityKind::ShiftedGamma);
        assert!((fit.variance() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn tail_prob_examples() {
        let fit = fit_density(&summary(0.1, 0.0, -0.5));
        let (lo, up) = tail_probs(&fit, 0.0);
        assert!((lo - 0.5).abs() < 1e-14 && (up - 0.5).abs() < 1e-14);
        assert_eq!(tail_probs(&fit, 100.0), (1.0, 0.0));
        assert_eq!(tail_probs(&fit, -100.0), (0.0, 1.0));
    }

    #[test]
    fn standard_r_examples() {
        let (_, up) = standard_r_pvalues(0.5f64, 4).unwrap();
        assert!((up - 0.25).abs() < 1e-14);
        for n in [4, 10, 100] {
            let (lo, up) = standard_r_pvalues(0.0f64, n).unwrap();
            assert_eq!((lo, up), (0.5, 0.5));
        }
        let (_, up) = standard_r_pvalues(0.06f64, 1000).unwrap();
        let normal = normal_cdf(0.06 * 999f64.sqrt()).1;
        assert!((up - normal).abs() / normal < 0.05);
        // n = 4 density is uniform 1/2.
        assert!((StandardRDensity::new(4).unwrap().pdf(0.3f64) - 0.5).abs() < 1e-14);
        assert!(standard_r_pvalues(0.1, 3).is_err());
    }

    #[test]
    fn fits_integrate_to_one_with_target_moments() {
        for m in [summary(1.0 / 49.0, 0.4, 0.1), summary(1.0 / 19.0, -0.3, -0.2), summary(0.02, 0.8, 1.5), summary(0.05, 1.2, 5.0)] {
            let fit = fit_density(&m);
            let (lo, hi) = fit.support();
            let sd = m.variance.sqrt();
            let (a, b) = (lo.max(-40.0 * sd), hi.min(40.0 * sd));
            let mass = integrate(|r| fit.pdf(r), a, b, 4000);
            let mean = integrate(|r| r * fit.pdf(r), a, b, 4000);
            let var = integrate(|r| r * r * fit.pdf(r), a, b, 4000);
            assert!((mass - 1.0).abs() < 1e-8, "{fit:?} mass {mass}");
            assert!(mean.abs() < 1e-9, "{fit:?} mean {mean}");
            assert!((var - m.variance).abs() < 1e-9, "{fit:?} variance {var}");
            assert!((fit.variance() - m.variance).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_inverts_tails() {
        for m in [summary(0.01, 0.5, 0.3), summary(0.01, 1.0, 4.0), summary(0.01, 0.0, 1.0)] {
            let fit = fit_density(&m);
            for p in [1e-6, 0.05, 0.5, 0.99] {
                let q = fit.quantile(p);
                assert!((fit.tail_probs(q).0 - p).abs() < 1e-10 * p.max(1e-3), "{fit:?} p={p}");
            }
        }
    }

    #[test]
    fn f32_fit() {
        let m = MomentSummary { mean: 0.0f32, variance: 0.02, skewness: 0.5, excess_kurtosis: 0.4 };
        let fit = fit_density(&m);
        let fit64 = fit_density(&summary(0.02, 0.5, 0.4));
        assert_eq!(fit.kind(), fit64.kind());
        assert!((fit.tail_probs(0.2).1 as f64 - fit64.tail_probs(0.2).1).abs() < 1e-4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn beta_parameters_round_trip(a in 0.5f64..50.0, b in 0.5f64..50.0) {
                let (_, _, s, k) = beta_moments(a, b);
                let (ra, rb) = solve_beta_params(s, k).unwrap();
                prop_assert!((ra - a).abs() <= 1e-8 * a.max(1.0), "a {a} -> {ra}");
                prop_assert!((rb - b).abs() <= 1e-8 * b.max(1.0), "b {b} -> {rb}");
            }

            #[test]
            fn fitted_beta_reproduces_requested_moments(a in 0.7f64..40.0, b in 0.7f64..40.0, var in 1e-4f64..0.2) {
                let (_, _, s, k) = beta_moments(a, b);
                let fit = fit_density(&summary(var, s, k));
                prop_assert_eq!(fit.kind(), DensityKind::RescaledBeta);
                if let DensityFit::RescaledBeta { alpha, beta, location, scale } = fit {
                    let (mb, vb, fs, fk) = beta_moments(alpha, beta);
                    prop_assert!((location + scale * mb).abs() < 1e-12);
                    prop_assert!((vb * scale * scale - var).abs() < 1e-9 * var.max(1.0));
                    prop_assert!((fs - s).abs() < 1e-8 && (fk - k).abs() < 1e-8);
                }
            }

            #[test]
            fn tails_are_monotone_and_complementary(s in -1.5f64..1.5, excess in 0.0f64..3.0, r1 in -0.5f64..0.5, dr in 0.0f64..0.3) {
                let k = s * s - 1.9 + excess;
                let fit = fit_density(&summary(0.01, s, k));
                let (l1, u1) = fit.tail_probs(r1);
                let (l2, _) = fit.tail_probs(r1 + dr);
                prop_assert!(l1 <= l2 + 1e-15);
                prop_assert!((l1 + u1 - 1.0).abs() < 1e-14);
            }

            #[test]
            fn reflection_swaps_tails(s in 0.05f64..1.5, excess in 0.0f64..3.0, r in -0.3f64..0.3) {
                let k = s * s - 1.9 + excess;
                let plus = fit_density(&summary(0.01, s, k));
                let minus = fit_density(&summary(0.01, -s, k));
                let (l, u) = plus.tail_probs(r);
                let (l2, u2) = minus.tail_probs(-r);
                prop_assert!((l - u2).abs() < 1e-11 && (u - l2).abs() < 1e-11, "{plus:?} {minus:?}");
            }
        }
    }
}
