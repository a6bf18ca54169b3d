//! Numerical dynamics of complex Hénon maps and their compositions.

pub mod error;
pub mod linalg;
pub mod poly1d;
pub mod roots;
pub mod henon;
mod homotopy;
pub mod io;
pub mod periodic;
pub mod assignment;
pub mod spectra;
pub mod lyap;
pub mod bifurcation;

pub use error::{HenonError, Result};
pub use num_complex::Complex64 as C64;
pub use poly1d::{EscapeRate, MonicCenteredPolynomial, Polynomial};
pub use henon::{HenonComposition, HenonFactor, InverseNormalForm, Point};
pub use periodic::{OrbitType, PeriodicOrbitRecord, PeriodicSet, SolveStatus};
