//! Numerical toolkit for studying the mean-radius growth of quasiconformal
//! maps of punctured balls through their beam (cylinder) coordinates.
//!
//! The beam picture: the exponential-type covering `Z` maps the infinite beam
//! `R^{n-1} x R` onto `R^n \ {0}`, sending the horizontal slice at height `t`
//! onto the sphere of radius `e^t`. A map `f` of the punctured ball lifts to a
//! beam self-map `f~` via `f o Z = Z o f~`. This crate provides:
//!
//! * [`geometry`]  - small exact-geometry kernel: generalized cross products,
//!   power-sum inequalities, unit-ball volumes, slice subdivisions into boxes,
//!   and the quotient (beam) metric.
//! * [`zorich`]    - explicit covering maps `Z` for n = 2, 3 with their
//!   automorphy groups, inverses and branch selection.
//! * [`mapzoo`]    - a catalog of test maps: linear, radial-profile, spiral,
//!   and beam maps that paste a piecewise-affine square homeomorphism with a
//!   Koch-type midline into a sequence of shrinking squares.
//! * [`transform`] - evaluation of the lifted map `f~`, slice curves and
//!   finite-difference slice partials with branch tracking.
//! * [`radius`]    - Monte Carlo image volumes, mean-radius curves, their
//!   logarithmic transform, difference quotients and bi-Lipschitz estimates.
//! * [`analysis`]  - bounded-integral-parameterization (BIP) diagnostics,
//!   box-subdivision studies with the associated inequality chains,
//!   slice-to-volume comparison, weak quasisymmetry sampling, slice sizes,
//!   asymptotic representatives and generalized derivatives.

pub mod analysis;
pub mod geometry;
pub mod mapzoo;
pub mod radius;
pub mod rng;
pub mod transform;
pub mod zorich;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is outside the documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A construction step produced an inconsistent object (non-monotone
    /// profile, inverted triangle, ...).
    #[error("construction failed: {0}")]
    Construction(String),
    /// A point left the domain where a map is defined.
    #[error("domain violation: {0}")]
    Domain(String),
    /// The image degenerated (zero volume, zero distance, ...).
    #[error("degenerate image: {0}")]
    Degenerate(String),
    /// A numerical estimate failed to converge or produced non-finite values.
    #[error("estimation failure: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
    pub fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }
}

/// Schema version stamped into every serialized report.
pub const SCHEMA_VERSION: u32 = 1;
