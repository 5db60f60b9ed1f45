use num_complex::Complex64;
use thiserror::Error;

use crate::units::Unit;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot convert {from} to {to}: incompatible dimensions")]
    IncompatibleUnits { from: Unit, to: Unit },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field strength must be positive for this operation")]
    ZeroField,

    #[error("k^2/2 = {energy:.6e} is not below the barrier U = {barrier:.6e}; only the tunneling regime is supported")]
    NotTunneling { energy: f64, barrier: f64 },

    #[error("Airy function overflows at z = {0}")]
    AiryOverflow(Complex64),

    #[error("singular matching system at the surface (|det| = {det:.3e})")]
    SingularMatching { det: f64 },

    #[error("p = {0} lies on the branch cut of sqrt(-2ip); select a side explicitly")]
    OnBranchCut(Complex64),

    #[error("p = {p} is at or near a pole (|denominator| = {denominator:.3e})")]
    NearPole { p: Complex64, denominator: f64 },

    #[error("quadrature did not converge on [{lower}, {upper}]: error estimate {estimate:.3e} after {subdivisions} subdivisions")]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        subdivisions: usize,
    },

    #[error("inverse Laplace transform not converged: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    InversionNotConverged { estimate: f64, tolerance: f64 },

    #[error("invalid contour: {0}")]
    Contour(String),

    #[error("pole search: winding number {winding} but {found} roots refined")]
    PoleCountMismatch { winding: i64, found: usize },

    #[error("pole search failed: {0}")]
    PoleSearch(String),

    #[error("residue contour: {0}")]
    ResidueContour(String),

    #[error("k-node {node} (k = {k:.6}): {source}")]
    SupplyNode {
        node: usize,
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config {}: {message}", config_location(*line))]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn config_location(line: usize) -> String {
    if line == 0 {
        "(command line or validation)".to_string()
    } else {
        format!("line {line}")
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
