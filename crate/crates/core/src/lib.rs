//! Moment-corrected correlation: fast permutation p-values for trend tests.
//!
//! The exact first four moments of the permutation distribution of the
//! correlation are computed in closed form, a density is matched to them, and
//! tail areas are read off that density. Everything is generic over the
//! floating point type; the aliases below fix it to `f64`.

pub mod ci;
pub mod covariates;
pub mod density;
pub mod engine;
pub mod enumerate;
pub mod error;
pub mod model;
pub mod moments;
pub mod oracle;
pub mod referent;
pub mod scalar;
pub mod sim;
pub mod special;

pub use ci::{mcc_ci, mcc_ci_with, CiMethod, ConfidenceInterval, MomentPolicy};
pub use covariates::{residualize, residualize_matrix, stratified_mcc_matrix, stratified_mcc_row, CovariateMatrix};
pub use density::{fit_density, standard_r_pvalues, DensityFit, DensityKind};
pub use engine::{
    mcc_matrix, mcc_row, mcc_row_report, AnalysisConfig, ContinuityCorrection, NullDistribution, PValueSet, RowReport,
    SmallStrata,
};
pub use error::{Error, Result};
pub use model::{FeatureMatrix, ResponseVector, ScaledPair, StrataAssignment};
pub use moments::{unstratified_moments, MomentSummary};
pub use oracle::{exhaustive_pvalues, monte_carlo_matrix, monte_carlo_pvalues, OracleResult};
pub use referent::{mcc1_all_row, mcc1_row, select_referent, Mixture};
pub use scalar::Real;

pub type DensityFit64 = DensityFit<f64>;
pub type PValueSet64 = PValueSet<f64>;
pub type RowReport64 = RowReport<f64>;
pub type MomentSummary64 = MomentSummary<f64>;
pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type ResponseVector64 = ResponseVector<f64>;
pub type CovariateMatrix64 = CovariateMatrix<f64>;
pub type Mixture64 = Mixture<f64>;
