//! Inverse Laplace transform: Bromwich-line FFT inversion, and the deformed
//! contour made of poles and the branch cut.

pub mod asymptotics;
pub mod contour;
pub mod fft;
pub mod poles;

pub use asymptotics::{asymptotics, AsymptoticCoeffs};
pub use contour::{branch_cut, principal_residue, CutOptions, DeformedContour};
pub use poles::{find_poles, find_poles_default, Pole, PoleSearch, SearchBox};
pub use fft::{invert, ContourSpec, Inversion, TimeGrid, Window};
