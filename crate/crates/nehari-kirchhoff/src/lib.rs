//! Numerical two-branch Nehari-manifold solver for a singular Kirchhoff-type
//! fractional p-Laplacian problem on an interval:
//!
//! ```text
//! (a + b ||u||^{p(theta-1)}) (-Delta)_p^s u + (u+)^{p-1}
//!     = c(x) (u+)^{-alpha} + lambda f(x, u+)   in Omega,
//! u = 0                                        in R^n \ Omega,
//! ```
//!
//! with `f(x,u) = w(x) |u|^{q-2} u`. The crate discretizes the energy
//! functional with piecewise-linear mesh functions and full nonlocal
//! quadrature (Gagliardo kernel with exact exterior correction), carries out
//! the fiber-map calculus on rays `t -> J(t u)`, evaluates the closed-form
//! admissibility thresholds, and locates the two positive solutions by
//! manifold-projected descent.
//!
//! Module map:
//! - [`mesh`], [`problem`], [`nonlinearity`]: configuration, validation and
//!   the nodal function type shared by everything else.
//! - [`quadrature`]: every integral (seminorm, Lp norms, singular and
//!   nonlinear terms, weak-form pairings, nodal load vectors).
//! - [`fiber`]: fiber maps phi/psi/k, root finding and Nehari classification.
//! - [`thresholds`]: closed-form admissibility constants and the discrete
//!   Sobolev constant estimate.
//! - [`extremal`]: the Talenti-type extremal family, cutoffs and epsilon-order
//!   fits used in the critical regime.
//! - [`solver`]: projected descent on both manifold branches with weak-form
//!   residual certification.
//! - [`verify`]: the seeded property suites behind `nk verify`.

pub mod extremal;
pub mod fiber;
pub mod mesh;
pub mod nonlinearity;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod thresholds;
pub mod verify;

pub use fiber::{FiberProfile, NehariClass, NehariRoots};
pub use mesh::{DiscreteFunction, Mesh1d};
pub use problem::{ProblemConfig, ValidatedConfig, WeightSpec};
pub use solver::{Branch, SolveReport};
pub use thresholds::Thresholds;

/// Crate-wide error type. Each variant is a named diagnostic for one
/// documented failure path; the FFI layer maps them onto stable codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("exponent chain violated: {0}")]
    ExponentChainViolated(String),
    #[error("dimension constraint violated: {0}")]
    DimensionViolated(String),
    #[error("negative weight: {0}")]
    NegativeWeight(String),
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("function does not vanish on the boundary nodes")]
    NonconformingFunction,
    #[error("point lies on the boundary or outside the domain")]
    OnBoundary,
    #[error("fiber derivative needs t > 0, got {0}")]
    NonpositiveT(f64),
    #[error("degenerate fiber profile: {0}")]
    DegenerateProfile(String),
    #[error("no root bracket: {0}")]
    NoRootBracket(String),
    #[error("cutoff ball is not contained in the domain")]
    CutoffExceedsDomain,
    #[error("epsilon grid needs at least {need} values, got {got}")]
    InsufficientGrid { need: usize, got: usize },
    #[error("wrong-sign nonlinearity weight: {0}")]
    WrongSignWeight(String),
    #[error("singular term hit a nonpositive interior node with flooring disabled")]
    SingularEvaluation,
    #[error("projection lost during descent: {0}")]
    ProjectionLost(String),
    #[error("descent stalled: {0}")]
    Stalled(String),
    #[error("lambda {lambda:e} is not below the required threshold {threshold:e}")]
    ThresholdExceeded { lambda: f64, threshold: f64 },
    #[error("solutions are not separated: ||u+ - u-|| = {separation:e} <= {required:e}")]
    DistinctnessViolated { separation: f64, required: f64 },
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable numeric code, shared with the C header.
    pub fn code(&self) -> i32 {
        match self {
            Error::ExponentChainViolated(_) => 1,
            Error::DimensionViolated(_) => 2,
            Error::NegativeWeight(_) => 3,
            Error::ConfigParse(_) => 4,
            Error::NonconformingFunction => 5,
            Error::OnBoundary => 6,
            Error::NonpositiveT(_) => 7,
            Error::DegenerateProfile(_) => 8,
            Error::NoRootBracket(_) => 9,
            Error::CutoffExceedsDomain => 10,
            Error::InsufficientGrid { .. } => 11,
            Error::WrongSignWeight(_) => 12,
            Error::SingularEvaluation => 13,
            Error::ProjectionLost(_) => 14,
            Error::Stalled(_) => 15,
            Error::ThresholdExceeded { .. } => 16,
            Error::Io(_) => 17,
            Error::DistinctnessViolated { .. } => 18,
        }
    }
}
