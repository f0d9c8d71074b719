//! hp quasi-interpolation of functions with corner and edge singularities on
//! geometric meshes, and its compilation into explicit ReLU networks.
//!
//! The pipeline is: a [`catalog::WeightedFunction`] is projected onto a
//! tensor-product hp space ([`hp::interpolant`]), the resulting basis and
//! coefficients are emulated by ReLU networks ([`nn::emulation`]) and wired
//! together with the network calculus ([`nn::calculus`]) in [`assembly`].
//! [`metrics`] measures H¹ errors by quadrature and fits convergence rates.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Loops over several parallel arrays read better with one index.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod catalog;
pub mod error;
pub mod hp;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod poly;
pub mod selfcheck;

pub use error::{Error, Result};
