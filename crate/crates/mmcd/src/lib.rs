//! Robust location and covariance estimation for matrix-variate data.
//!
//! Observations are `p x q` real matrices modeled with a mean matrix and a
//! Kronecker-structured covariance (a row factor and a column factor). The
//! trimmed estimator minimizes `p ln det Σ_col + q ln det Σ_row` over
//! subsets of `h` observations via a seeded concentration-step search, then
//! applies a consistency rescaling and a chi-square reweighting step.
//! Squared matrix Mahalanobis distances flag outliers, and Shapley values
//! decompose each distance into cell, row and column contributions.
//!
//! The [`simlab`] module reproduces the contamination and efficiency
//! experiments at desk scale; [`io`] defines the file formats and the
//! commands of the companion binary. See the crate examples for one
//! runnable program per capability.

pub mod chi2;
pub mod error;
pub mod flipflop;
pub mod io;
pub mod linalg;
pub mod mmcd;
pub mod model;
pub mod params;
pub mod seed;
pub mod shapley;
pub mod simlab;
pub mod stack;

pub use error::{Error, Result};
pub use flipflop::{
    aspect_ratio_floor, flip_flop_mle, flip_flop_mle_with_init, mean_mmd_identity_check,
    min_subset_size, FlipFlopConfig, IterMode, MLEFit,
};
pub use mmcd::{
    clean_subset_probability, consistency_factor, cstep, fast_mmcd, max_breakdown_h,
    required_subsets, BreakdownH, CStepOutcome, MMCDConfig, MMCDFit, Subsampling,
};
pub use model::{matnorm_logpdf, mmd_squared, sample, DistributionSpec, Family};
pub use params::{ParamSet, Precision};
pub use shapley::{
    detect, shapley, shapley_invariance_suite, DetectionResult, InvarianceReport, ShapleyReport,
};
pub use simlab::{
    angle_error, classification_scores, contaminate, contamination_experiment,
    efficiency_experiment, frobenius_error, kl_divergence, make_cov, ContaminationSpec, CovSpec,
    EstimatorId, RepRecord, Scheme, SimResult, SimScenario,
};
pub use stack::MatrixStack;
