//! Radial k-Hessian evolution lab: the stationary separable profile on a
//! ball, the parabolic march `u_t = S_k(D^2 u)` with its decay diagnostics,
//! and the explicit k-Barenblatt family on the whole space.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissible;
pub mod barenblatt;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod grid;
pub mod io;
pub mod operator;
pub mod params;
pub mod quad;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};
