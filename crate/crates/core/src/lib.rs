//! Online conformal calibration for forecasters on regime-switching series.
//!
//! Split conformal, ACI and aggregated ACI wrap any point forecaster that
//! implements [`forecasters::Forecaster`]. Synthetic switching-AR and Lorenz
//! generators, rolling evaluation, and grid comparison live alongside.

pub mod conformal;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod forecasters;
pub mod io;
pub mod parallel;
pub mod series;

pub use error::{Error, ErrorKind, Result};
