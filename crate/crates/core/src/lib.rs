//! Spectra of Hill operators `-y'' + v y` on `[0, pi]` with singular periodic
//! potentials `v = v0 + Q'`, `Q` in L^2.

pub mod basic_equation;
pub mod config;
pub mod error;
pub mod fit;
pub mod inverse_map;
pub mod gaps;
pub mod linalg;
pub mod matrix_op;
pub mod perturb;
pub mod potential;
pub mod riesz;
pub mod shooting;
pub mod spectrum;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
