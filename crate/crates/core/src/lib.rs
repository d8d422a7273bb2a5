//! Periodic Thomas–Fermi–Dirac–von Weizsäcker minimization on cubic
//! supercells and radial ground states of the effective two-power NLS.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coulomb;
pub mod error;
pub mod fft;
pub mod minimize;
pub mod model;
pub mod radial;
pub mod scan;
pub mod tridiag;

pub use error::{Error, Result};
