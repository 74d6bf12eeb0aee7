//! Weighted L² norms of entire functions under radial plurisubharmonic
//! weights on ℂⁿ.
//!
//! The crate decides finiteness of `∫ |z^α|² e^{−φ}` symbolically, evaluates
//! finite ones in the log domain, builds the increasing weight sequence whose
//! limit breaks global strong openness, and runs a mode-by-mode minimal
//! `∂̄` solver with its audits.

pub mod counterexample;
pub mod dbar_min;
pub mod error;
pub mod integrability;
pub mod logreal;
pub mod quadrature;
pub mod radial_weights;
pub mod series;

#[cfg(any(test, feature = "testing"))]
pub mod testing;

pub use error::{Error, Result};
pub use logreal::LogReal;
