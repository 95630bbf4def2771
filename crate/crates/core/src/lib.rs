//! Numerical laboratory for learning classifiers whose decision boundaries
//! are Barron functions.
//!
//! The crate covers Barron-function synthesis ([`barron`]), horizon and
//! piecewise classifiers ([`classifier`]), lifted densities with L¹,
//! Hellinger and KL distances ([`density`]), metric-entropy tools
//! ([`entropy`]), hinge-loss ERM over small ReLU networks ([`erm`]) and the
//! experiment drivers behind the `lab` binary ([`experiment`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barron;
pub mod bits;
pub mod classifier;
pub mod density;
pub mod entropy;
pub mod erm;
pub mod error;
pub mod experiment;
pub mod field;
pub mod num;
mod par;

pub use error::{LabError, Result};
