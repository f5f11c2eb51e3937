//! Numerical toolkit for the quantities in the entropy / Lyapunov exponent /
//! unstable-set dimension inequality on model systems with known answers.

pub mod dimension;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod lyapunov;
pub mod partitions;
pub mod rng;
pub mod systems;

pub use error::{Error, Result};
