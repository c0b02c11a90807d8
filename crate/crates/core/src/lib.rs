//! Multivariate quadratic Hawkes processes: model specification, simulation,
//! correlation estimation with Yule-Walker checks, stationary tail exponents and
//! power-law decay exponents.

// `!(x > 0.0)` is the NaN-rejecting form of input checks; indexed loops mirror the
// matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod estimate;
pub mod linalg;
pub mod manifest;
pub mod model;
pub mod quad;
pub mod simulate;
pub mod tail;
