//! Kernels, transition densities, path simulation and Monte Carlo
//! verification for multivariate Bessel, Dunkl and hybrid processes with
//! drift.

pub mod densities;
pub mod error;
pub mod experiments;
pub mod kernels1d;
pub mod kernels_nd;
pub mod linalg;
pub mod logvalue;
pub mod quad;
pub mod rng;
pub mod rootsys;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use logvalue::LogValue;
pub use rootsys::{Multiplicity, RootKind, RootSystemSpec};
