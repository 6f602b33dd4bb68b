//! Truncated tensor algebra: signatures of piecewise-linear paths, Chen
//! products, logarithms, and the Chen-Strichartz coefficients.

pub mod path;
pub mod series;
pub mod strichartz;

pub use path::{path_signature, PiecewiseLinearPath};
pub use series::TensorSeries;
pub use strichartz::{
    descents, iterated_integral, strichartz_lambda, strichartz_lambda_capped,
    strichartz_log_signature, DescentStatistic, DEFAULT_LAMBDA_LEVEL_CAP,
};

use crate::error::Result;
use crate::freelie::{FreeLieAlgebra, LieSeries};

/// Signature of the straight segment with the given increment.
pub fn segment_signature(increment: &[f64], depth: usize) -> TensorSeries {
    TensorSeries::segment(increment, depth)
}

/// Chen product of two signatures.
pub fn chen_concat(a: &TensorSeries, b: &TensorSeries) -> Result<TensorSeries> {
    a.mul(b)
}

pub fn log_series(s: &TensorSeries) -> Result<TensorSeries> {
    s.log()
}

/// Lyndon coordinates of a (log-signature) Lie element given as a tensor.
pub fn project_to_lie(alg: &FreeLieAlgebra, log_sig: &TensorSeries) -> Result<LieSeries> {
    alg.project(log_sig)
}

/// Lyndon coordinates of `log S(path)` up to the depth of `alg`.
pub fn log_signature(alg: &FreeLieAlgebra, path: &PiecewiseLinearPath) -> Result<LieSeries> {
    let sig = path_signature(path, alg.depth());
    alg.project(&sig.log()?)
}
