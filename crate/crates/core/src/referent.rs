//! One-step refinement conditioning on the partner of a referent sample.
//!
//! Fixing which `y` value is paired with the referent `x_i` splits the
//! statistic into a known product plus an affine function of the correlation
//! of the remaining `n − 1` pairs. Each of the `n` possible partners gives a
//! conditional fit; the null density is their equal-weight mixture.

use rayon::prelude::*;

use crate::density::{fit_density, DensityFit, DensityKind};
use crate::engine::{pvalue_set_with_offset, AnalysisConfig, NullDistribution, PValueSet};
use crate::error::{Error, Result};
use crate::model::{has_variation, power_sums, ScaledPair};
use crate::moments::scaled_moments;
use crate::scalar::Real;

/// Smallest sample size for which the reduced pair still has four-moment fits.
pub const MIN_SAMPLES: usize = 6;

/// `r_π = referent_x · paired_y + b0 + b1 · r_reduced` for every permutation
/// pairing `paired_y` with `referent_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferentDecomposition<T> {
    pub referent_x: T,
    pub paired_y: T,
    pub b0: T,
    pub b1: T,
    /// The other `n − 1` values of each vector, in original order, re-centered and re-scaled.
    pub reduced_pair: ScaledPair<T>,
}

impl<T: Real> ReferentDecomposition<T> {
    /// Value of the statistic given the reduced correlation.
    pub fn statistic(&self, r_reduced: T) -> T {
        self.referent_x * self.paired_y + self.b0 + self.b1 * r_reduced
    }
}

/// Removes index `i` from a centered unit vector; returns the scale factor and the rescaled rest.
fn reduce<T: Real>(v: &[T], i: usize) -> (T, Option<Vec<T>>) {
    let n = v.len();
    let nm1 = T::from_count(n - 1);
    let vi = v[i];
    let norm_sq = T::one() - T::from_count(n) * vi * vi / nm1;
    let norm = norm_sq.max(T::zero()).sqrt();
    let rest: Vec<T> = v.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &u)| u + vi / nm1).collect();
    if !has_variation(&rest) || !(norm > T::zero()) {
        return (T::zero(), None);
    }
    // Re-centering and re-scaling from scratch keeps the reduced pair within
    // the scaled-vector tolerance.
    let rest = crate::model::scale_center(&rest).ok();
    (norm, rest)
}

/// Decomposition of `p` when `x[referent]` is paired with `y[y_choice]`.
pub fn referent_decomposition<T: Real>(p: &ScaledPair<T>, referent: usize, y_choice: usize) -> Result<ReferentDecomposition<T>> {
    let n = p.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: n });
    }
    if referent >= n || y_choice >= n {
        return Err(Error::InvalidArgument(format!("index out of range for {n} samples")));
    }
    let (nx, rx) = reduce(p.x(), referent);
    let (ny, ry) = reduce(p.y(), y_choice);
    let (rx, ry) = match (rx, ry) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Degenerate("reduced vector has no spread".into())),
    };
    let (xi, yj) = (p.x()[referent], p.y()[y_choice]);
    Ok(ReferentDecomposition {
        referent_x: xi,
        paired_y: yj,
        b0: xi * yj / T::from_count(n - 1),
        b1: nx * ny,
        reduced_pair: ScaledPair::from_scaled(rx, ry)?,
    })
}

/// One conditional piece of the mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component<T> {
    /// `r = shift + scale · R` with `R` following `fit`.
    Fitted { shift: T, scale: T, fit: DensityFit<T> },
    /// The rest of the statistic is fixed once the partner is chosen.
    Point(T),
}

impl<T: Real> Component<T> {
    fn tail_probs(&self, r: T) -> (T, T) {
        match *self {
            Component::Fitted { shift, scale, fit } => fit.tail_probs((r - shift) / scale),
            Component::Point(v) => {
                let (zero, one) = (T::zero(), T::one());
                if r < v {
                    (zero, one)
                } else if r > v {
                    (one, zero)
                } else {
                    (one, one)
                }
            }
        }
    }

    fn pdf(&self, r: T) -> T {
        match *self {
            Component::Fitted { shift, scale, fit } => fit.pdf((r - shift) / scale) / scale,
            Component::Point(_) => T::zero(),
        }
    }
}

/// Equal-weight mixture of conditional fits.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture<T> {
    components: Vec<Component<T>>,
}

impl<T: Real> Mixture<T> {
    pub fn new(components: Vec<Component<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    /// Concatenates mixtures so every component keeps equal weight.
    pub fn pooled(parts: Vec<Mixture<T>>) -> Result<Self> {
        let sizes: Vec<usize> = parts.iter().map(|m| m.components.len()).collect();
        if sizes.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidArgument("pooled mixtures must have equal sizes".into()));
        }
        Self::new(parts.into_iter().flat_map(|m| m.components).collect())
    }

    /// Density; point-mass components contribute nothing.
    pub fn pdf(&self, r: T) -> T {
        let total: T = self.components.iter().map(|c| c.pdf(r)).sum();
        total / T::from_count(self.components.len())
    }
}

impl<T: Real> NullDistribution<T> for Mixture<T> {
    fn tail_probs(&self, r: T) -> (T, T) {
        let (lo, up) = self
            .components
            .iter()
            .map(|c| c.tail_probs(r))
            .fold((T::zero(), T::zero()), |(a, b), (l, u)| (a + l, b + u));
        let m = T::from_count(self.components.len());
        (lo / m, up / m)
    }

    fn kind(&self) -> DensityKind {
        DensityKind::Mixture
    }
}

/// Mixture over the `n` possible partners of `x[referent]`.
pub fn referent_mixture<T: Real>(p: &ScaledPair<T>, referent: usize) -> Result<Mixture<T>> {
    let n = p.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: n });
    }
    if referent >= n {
        return Err(Error::InvalidArgument(format!("referent {referent} out of range for {n} samples")));
    }
    let (nx, rx) = reduce(p.x(), referent);
    let rx = rx.ok_or_else(|| Error::Degenerate("vector without the referent has no spread".into()))?;
    let px = power_sums(&rx);
    let xi = p.x()[referent];
    let nm1 = T::from_count(n - 1);
    let components = (0..n)
        .map(|j| {
            let yj = p.y()[j];
            let shift = xi * yj + xi * yj / nm1;
            let (ny, ry) = reduce(p.y(), j);
            match ry {
                None => Ok(Component::Point(shift)),
                Some(ry) => {
                    let py = power_sums(&ry);
                    let m = scaled_moments(px.s3, px.s4, py.s3, py.s4, n - 1)?;
                    Ok(Component::Fitted { shift, scale: nx * ny, fit: fit_density(&m) })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Mixture::new(components)
}

fn offset_on_r<T: Real>(x: &[T], y: &[T], config: &AnalysisConfig) -> T {
    let c = config.continuity_offset(false);
    if c == 0.0 {
        return T::zero();
    }
    let norm = |v: &[T]| {
        let mean = v.iter().copied().sum::<T>() / T::from_count(v.len());
        v.iter().map(|&u| (u - mean) * (u - mean)).sum::<T>().sqrt()
    };
    T::lit(c) / (norm(x) * norm(y))
}

/// The pair with the referent on the `y` side, so `referent` indexes a `y` value.
fn referent_pair<T: Real>(x: &[T], y: &[T]) -> Result<ScaledPair<T>> {
    Ok(ScaledPair::new(x, y)?.swapped())
}

/// MCC₁ p-values conditioning on the partner of `y[referent]`.
///
/// The statistic is symmetric in its two vectors, so conditioning on which
/// `x` is paired with the referent `y` is the same decomposition with roles
/// exchanged.
pub fn mcc1_row<T: Real>(x: &[T], y: &[T], referent: usize, config: &AnalysisConfig) -> Result<PValueSet<T>> {
    config.validate()?;
    let p = referent_pair(x, y)?;
    let mix = referent_mixture(&p, referent)?;
    let r_obs = crate::model::trend_statistic(&p);
    Ok(pvalue_set_with_offset(&mix, r_obs, offset_on_r(x, y, config)))
}

/// Mixture pooled over every sample as referent.
pub fn all_referents_mixture<T: Real>(x: &[T], y: &[T]) -> Result<Mixture<T>> {
    let p = referent_pair(x, y)?;
    let parts = (0..p.len()).into_par_iter().map(|i| referent_mixture(&p, i)).collect::<Result<Vec<_>>>()?;
    Mixture::pooled(parts)
}

/// MCC₁ averaged over every sample as referent.
pub fn mcc1_all_row<T: Real>(x: &[T], y: &[T], config: &AnalysisConfig) -> Result<PValueSet<T>> {
    config.validate()?;
    let mix = all_referents_mixture(x, y)?;
    let r_obs = crate::model::trend_statistic(&referent_pair(x, y)?);
    Ok(pvalue_set_with_offset(&mix, r_obs, offset_on_r(x, y, config)))
}

/// Index of the value farthest from the median; the lowest index wins ties.
pub fn select_referent<T: Real>(y: &[T]) -> usize {
    if y.is_empty() {
        return 0;
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let h = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[h] } else { (sorted[h - 1] + sorted[h]) / T::lit(2.0) };
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if (v - median).abs() > (y[best] - median).abs() {
            best = i;
        }
    }
    best
}
