//! Executable workbench for towers of general algorithms, finite-query
//! evaluation reductions and height certificates.

pub mod catalog;
pub mod certificates;
pub mod cli;
pub mod error;
pub mod integration;
pub mod koopman;
pub mod lattice;
pub mod model;
pub mod reductions;
pub mod spectral;
pub mod value;

pub use error::{Result, SciError};
pub use value::{Rational, Value};
