//! Estimation from event streams: binned two- and three-point correlations, residuals
//! of the Yule-Walker equations for a candidate specification, leverage and Zumbach
//! correlators, and tail-index statistics.

mod diagnostics;
mod moments;
mod stats;
mod weights;
mod yule_walker;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diagnostics::{diagnostics_leverage_zumbach, Correlator, DiagnosticCurves, PairCurves};
pub use moments::{estimate_correlations, estimate_correlations_with, CorrelationSet, EstimateOptions, Moments};
pub use stats::{chi_square_test, hill_tail_index, ChiSquare, HillEstimate, TopOrderStatistics};
pub use weights::{check_kernel, pair_weights, triangle_weights, SUPPORT_TOLERANCE};
pub use yule_walker::{
    recover_activity_kernels, yw_residual_three_point, yw_residual_two_point, ActivityKernels, Equation, ResidualCell,
    ThreePoint, YwResidualReport,
};

use crate::model::ModelError;

/// Default number of batch-means segments.
pub const DEFAULT_SEGMENTS: usize = 20;
/// Largest number of lags accepted by the three-point estimators.
pub const MAX_LAGS: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("stream has no events")]
    Empty,
    #[error("horizon {horizon} is shorter than the required {required}")]
    TooShort { horizon: f64, required: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("kernel grid step {step} does not align with the bin width {dt}")]
    GridMismatch { dt: f64, step: f64 },
    #[error("kernel mass fraction {fraction:.3e} lies beyond the lag span {span}")]
    SupportNotCovered { fraction: f64, span: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed correlation bundle: {0}")]
    Format(String),
}

/// Sizes of the unknown kernel sets and of the two-point system on `q` lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownCounts {
    /// Time-diagonal kernel values on the lag triangle.
    pub k_d: usize,
    /// Off-diagonal cross-asset kernel values.
    pub k_cross: usize,
    /// Independent two-point equations.
    pub equations_2pt: usize,
}

pub fn count_unknowns(n_assets: usize, q: usize) -> UnknownCounts {
    let n2 = n_assets * n_assets;
    let pairs = q * q.saturating_sub(1);
    UnknownCounts {
        k_d: (q + pairs / 2) * n2,
        k_cross: pairs * n_assets * n_assets.saturating_sub(1),
        equations_2pt: q * n_assets * (n_assets + 1) / 2,
    }
}
