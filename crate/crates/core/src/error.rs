//! Crate-wide error type.

use crate::linalg::LinalgError;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    /// Domain parameters violate their invariants.
    InvalidDomain(String),
    /// The requested domain has no mesh generator (cylinders are analytic-only).
    UnmeshableDomain(String),
    /// The requested resolution would exceed the vertex cap.
    MeshTooFine {
        vertices: usize,
        cap: usize,
    },
    /// Mesh text import failed.
    MeshFormat(String),
    /// The potential is not finite at some vertex.
    NonFinitePotential {
        vertex: usize,
    },
    /// More eigenpairs requested than the discretization carries.
    CountTooLarge {
        requested: usize,
        available: usize,
    },
    /// A dense eigensolve was requested beyond the configured size cap.
    DenseProblemTooLarge {
        size: usize,
        cap: usize,
    },
    /// The spectral shift sits on the discrete Dirichlet spectrum and
    /// deflation is disabled.
    DirichletResonance {
        lambda: f64,
    },
    /// Root bracketing expanded past its configured bound.
    BracketExpansionFailed {
        k: usize,
        bound: f64,
    },
    /// The certified branch value at the root missed its target.
    RootResidualTooLarge {
        k: usize,
        residual: f64,
    },
    /// A Robin branch increased along the sigma grid beyond tolerance.
    MonotonicityViolation {
        branch: usize,
        sigma: f64,
    },
    /// Eigenfunction is identically zero at the working tolerance.
    AllZeroVector,
    /// Test function has no boundary mass.
    ZeroBoundaryTrace,
    /// Boundary-layer extension requires a positive eigenvalue.
    NonPositiveSigma {
        sigma: f64,
    },
    TooFewEigenvalues {
        needed: usize,
        got: usize,
    },
    /// Requested Bessel order/argument is outside the supported range.
    UnsupportedArgument(String),
    /// Sign-change scan for a Bessel zero ran past its bound.
    ScanBoundExceeded {
        order: u32,
        index: u32,
    },
    /// The requested ground-state branch is not the spectral minimum.
    EpsTooLarge {
        order: u32,
        mu: f64,
    },
    Linalg(LinalgError),
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::InvalidDomain(msg) => write!(f, "invalid domain: {msg}"),
            SpectralError::UnmeshableDomain(msg) => {
                write!(f, "domain has no mesh generator: {msg}")
            }
            SpectralError::MeshTooFine { vertices, cap } => {
                write!(
                    f,
                    "mesh would have {vertices} vertices, above the cap of {cap}"
                )
            }
            SpectralError::MeshFormat(msg) => write!(f, "mesh format error: {msg}"),
            SpectralError::NonFinitePotential { vertex } => {
                write!(f, "potential is not finite at vertex {vertex}")
            }
            SpectralError::CountTooLarge {
                requested,
                available,
            } => {
                write!(
                    f,
                    "requested {requested} eigenpairs but only {available} are available"
                )
            }
            SpectralError::DenseProblemTooLarge { size, cap } => {
                write!(
                    f,
                    "dense eigensolve of size {size} exceeds the cap of {cap}"
                )
            }
            SpectralError::DirichletResonance { lambda } => {
                write!(f, "Dirichlet-resonance: lambda = {lambda} sits on the discrete Dirichlet spectrum")
            }
            SpectralError::BracketExpansionFailed { k, bound } => {
                write!(f, "no sign change for index {k} within |sigma| <= {bound}")
            }
            SpectralError::RootResidualTooLarge { k, residual } => {
                write!(f, "branch value at the root for index {k} misses its target by {residual}")
            }
            SpectralError::MonotonicityViolation { branch, sigma } => {
                write!(f, "Robin branch {branch} increased at sigma = {sigma}")
            }
            SpectralError::AllZeroVector => write!(f, "eigenfunction is identically zero"),
            SpectralError::ZeroBoundaryTrace => write!(f, "test function has zero boundary trace"),
            SpectralError::NonPositiveSigma { sigma } => {
                write!(f, "boundary-layer extension needs sigma > 0, got {sigma}")
            }
            SpectralError::TooFewEigenvalues { needed, got } => {
                write!(f, "need at least {needed} eigenvalues, got {got}")
            }
            SpectralError::UnsupportedArgument(msg) => write!(f, "unsupported argument: {msg}"),
            SpectralError::ScanBoundExceeded { order, index } => {
                write!(
                    f,
                    "zero scan exceeded its bound for J_{order}, zero #{index}"
                )
            }
            SpectralError::EpsTooLarge { order, mu } => {
                write!(
                    f,
                    "eps too large: branch n = {order} is not the spectral minimum at mu = {mu}"
                )
            }
            SpectralError::Linalg(e) => write!(f, "linear algebra failure: {e}"),
        }
    }
}

impl std::error::Error for SpectralError {}

impl From<LinalgError> for SpectralError {
    fn from(e: LinalgError) -> Self {
        SpectralError::Linalg(e)
    }
}

pub type Result<T> = std::result::Result<T, SpectralError>;
