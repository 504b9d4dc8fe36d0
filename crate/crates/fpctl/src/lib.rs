//! Optimal control of nonlinear nonlocal Fokker-Planck equations.
//!
//! The library solves
//!
//! ```text
//!   df/dt = -div( G[f;u] f - grad(D f) ),      G[f;u] = P[f] + u,
//! ```
//!
//! on a box with zero-flux boundaries, together with the adjoint
//! Hamilton-Jacobi equation of the tracking cost
//!
//! ```text
//!   J(u) = 1/2 int_0^T int ( sum_k |v_k - vbar_k|^2 s_k(v) + gamma |u|^2 ) f dv dt,
//! ```
//!
//! and a projected reduced-gradient outer loop with Barzilai-Borwein steps.
//!
//! Module layout mirrors the pipeline: [`mesh`] and [`fields`] hold the
//! discrete containers, [`model`] describes a concrete problem, [`nonlocal`]
//! evaluates the interaction drift and its adjoint, [`forward`] is the
//! flux-form Chang-Cooper/IMEX solver, [`backward`] the semi-Lagrangian
//! adjoint solver, [`optimize`] the outer loop and [`harness`] the benchmark
//! and oracle tooling used by the `fpctl` binary.

pub mod backward;
pub mod fields;
pub mod forward;
pub mod harness;
pub mod interp;
pub mod mesh;
pub mod model;
pub mod nonlocal;
pub mod optimize;

use thiserror::Error;

/// Errors shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    /// Domain, grid or time-grid construction rejected its inputs.
    #[error("invalid discretization: {0}")]
    InvalidGrid(String),
    /// A model description is inconsistent (dimensions, signs, families).
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// Initial density could not be normalized (zero or negative mass).
    #[error("initial density has non-positive mass")]
    ZeroMass,
    /// Initial density takes negative values.
    #[error("initial density is negative at cell {0}")]
    NegativeDensity(usize),
    /// Two fields or trajectories live on different meshes.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    /// Interpolation query outside the closed domain.
    #[error("point ({0}, {1}) lies outside the domain")]
    OutOfDomain(f64, f64),
    /// Diffusion vanishes or is negative where the scheme needs it positive.
    #[error("diffusion not positive at interface {0}")]
    DegenerateDiffusion(String),
    /// An implicit stage solve failed to reach its residual target.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    /// A fixed-point resolution (reaction term or characteristics) diverged.
    #[error("fixed point failed to converge: {0}")]
    FixedPoint(String),
    /// A solver produced a NaN or infinity.
    #[error("non-finite value produced: {0}")]
    NonFinite(String),
    /// Reflection cannot place a point back inside the domain.
    #[error("reflection offset {0} exceeds domain half-width {1}")]
    ReflectionTooWide(f64, f64),
    /// Unknown benchmark name.
    #[error("unknown benchmark '{0}'")]
    UnknownBenchmark(String),
    /// Configuration file is structurally valid JSON but semantically wrong.
    #[error("bad config: {0}")]
    Config(String),
    /// Iteration cap reached where the caller demanded convergence.
    #[error("iteration limit reached: {0}")]
    IterationLimit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
