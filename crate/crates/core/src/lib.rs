//! Numerical toolkit for the lowest eigenvalue of `−d²/ds² + κ²` on closed
//! unit-speed curves and the associated variational problem on orbits.

pub mod collapsed;
pub mod curve;
pub mod eigensolver;
pub mod ellipse;
pub mod error;
pub mod gegenbauer;
pub mod orbit;
pub mod probe;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
