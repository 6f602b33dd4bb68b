//! Free Carnot groups, truncated path signatures, N-step Brownian loop
//! samplers and Monte Carlo estimation of the loop holonomy operator.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the threaded batch executor live in the `brownloop` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod carnot;
pub mod error;
pub mod exec;
pub mod freelie;
pub mod holonomy;
pub mod loops;
pub mod observable;
pub mod poly;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod stats;
pub mod tensoralg;

pub use error::{Error, Result};
pub use freelie::{FreeLieAlgebra, LieSeries, LyndonElement, Word};
pub use scalar::Q;
pub use tensoralg::{PiecewiseLinearPath, TensorSeries};
