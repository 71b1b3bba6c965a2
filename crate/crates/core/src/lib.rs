//! Numerical laboratory for Steklov / Dirichlet-to-Neumann spectra of
//! `Delta + q - lambda` on planar domains.
//!
//! The crate discretizes the operators with P1 finite elements on structured
//! triangulations, reduces the Steklov problem to the boundary through a
//! Schur complement, runs the Robin-curve machinery that ties Steklov and
//! Robin spectra together, counts interior and boundary nodal domains of the
//! eigenfunctions, and validates everything against closed-form Bessel and
//! separation-of-variables references.

pub mod assembly;
pub mod duality;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nodal;
pub mod oracle;
pub mod rayleigh;
pub mod spectra;

pub use error::{Result, SpectralError};
