//! Numerical lab for multiplier energy estimates on the hyperboloidal foliation.

pub mod balance;
pub mod config;
pub mod energies;
pub mod error;
pub mod geometry;
pub mod identity_lab;
pub mod jet;
pub mod multipliers;
pub mod pipeline;
pub mod quadrature;
pub mod real;
pub mod solver;
pub mod taylor;

pub use error::{Error, Result};
