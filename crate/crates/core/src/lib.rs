pub mod airy;
pub mod cli;
pub mod config;
pub mod error;
pub mod inversion;
pub mod laplace;
pub mod observables;
pub mod quadrature;
pub mod scaled;
pub mod stationary;
pub mod units;

pub use error::{Error, Result};
