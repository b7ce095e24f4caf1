//! Numerical laboratory for the Novikov–Veselov equation on a doubly periodic
//! domain: pseudo-spectral evolution, planar KdV-type solutions and the
//! transverse instability analysis of the line soliton.

pub mod error;
pub mod evolver;
pub mod grid;
pub mod harness;
pub mod instability;
pub mod planar;
pub mod snapshot;

pub use error::{NvError, Result};
pub use evolver::{evolve, Evolver, NvState, NvSystem, SchemeParams};
pub use grid::{AuxMean, Fft2, RealField, SpectralField, TorusGrid};
