//! Numerical laboratory for integrable conservative systems on the two-sphere.
//!
//! The pipeline: solve the defining third-order ODE for the generating
//! function `psi`, assemble conformal metric families and natural systems
//! from it, construct their fourth-degree-in-momenta first integrals, and
//! verify conservation along symplectic flows.
//!
//! Complex-coordinate convention used throughout: `z = x + i y`,
//! `p_z = (p_x - i p_y)/2`, so `p_z p_zbar = (p_x^2 + p_y^2)/4`. Geodesic
//! Hamiltonians are normalized as `H = (p_x^2 + p_y^2)/(2 Lambda)` and
//! natural ones as `H = (p_x^2 + p_y^2)/(2 Lambda_K) + V`.

pub mod config;
pub mod flow;
pub mod jet;
pub mod jsonfmt;
pub mod metric;
pub mod natural;
pub mod psi;
pub mod quad;
pub mod quartic;
pub mod report;

pub use metric::{ConformalFactor, ConformalMetric, FAnsatzData, FamilyTag};
pub use natural::{NaturalSystem, SystemVariant};
pub use psi::{AsymptoticData, PsiSolution};
pub use quartic::{Chart, PhaseState, QuarticIntegral};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ODE solver failure: {0}")]
    Solver(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error("metric not positive: {0}")]
    Positivity(String),
    #[error("integrability criterion violated: {0}")]
    NotIntegrable(String),
    #[error("implicit stepper failed: {0}")]
    Stepper(String),
    #[error("trajectory left the solved domain: {0}")]
    DomainExit(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("config error for key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("no room on energy surface: {0}")]
    NoRoom(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
