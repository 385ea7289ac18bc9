//! Numerical audit tools for hypersurfaces of warped products
//! `I x_rho P^n` with a constant-curvature fiber.
//!
//! The crate covers the algebra of Newton tensors, the ambient geometry of
//! the warped product, graph hypersurfaces sampled on structured grids, the
//! trace operators `L_k` with their closed-form identities, comparison
//! arguments for the maximum principle at infinity, and theorem audits that
//! combine all of these.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ambient;
pub mod comparison;
pub mod error;
pub mod fiber;
pub mod grid;
pub mod hypersurface;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod residual;
pub mod scenarios;
pub mod suite;
pub mod symfun;

pub use error::{Error, Result};
