//! Numerical Gabor frame theory on arbitrary lattices L Z^{2d}: twisted
//! sequence algebras, Heisenberg-module inner products and norms, frame
//! certification via Janssen coefficients, and deformation scans over paths
//! of lattice generators.
//!
//! Everything is desk-scale (d = 1 or 2, box radii <= 64) and every nontrivial
//! identity is cross-checked against an independent brute-force route:
//! quadrature for inner products, dense matrix functions for algebra
//! inverses, and direct frame-operator summation for Janssen coefficients.

pub mod algebra;
pub mod error;
pub mod lattice;
pub mod module;
pub mod numeric;
pub mod windows;
pub mod spectral;

pub use error::{Error, Result};
