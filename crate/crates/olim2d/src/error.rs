//! Crate-wide error type.

use crate::math::Vec2;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain [{xmin}, {xmax}] x [{ymin}, {ymax}]")]
    InvalidDomain { xmin: f64, xmax: f64, ymin: f64, ymax: f64 },

    #[error("invalid grid size {nx} x {ny}")]
    InvalidGrid { nx: usize, ny: usize },

    #[error("diffusion matrix is singular at ({}, {})", at.x, at.y)]
    SingularDiffusion { at: Vec2 },

    #[error("quadratic form is not positive semidefinite (v'Av = {value})")]
    NotPositiveDefinite { value: f64 },

    #[error("model domain error at ({}, {}): {reason}", at.x, at.y)]
    ModelDomain { at: Vec2, reason: String },

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("root bracket [{a}, {b}] does not change sign")]
    InvalidBracket { a: f64, b: f64 },

    #[error("equilibrium at ({}, {}) is not asymptotically stable", at.x, at.y)]
    UnstableEquilibrium { at: Vec2 },

    #[error("quasi-potential matrix failed the Hamilton-Jacobi identity check (residual {residual:.3e})")]
    QpMatrixIdentity { residual: f64 },

    #[error("attractor ({}, {}) lies outside the computational domain", at.x, at.y)]
    AttractorOutsideDomain { at: Vec2 },

    #[error("initialization produced no Considered nodes")]
    EmptyInitialization,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("point ({}, {}) is outside the computed region", at.x, at.y)]
    OutsideComputedRegion { at: Vec2 },

    #[error("model provides no exact solution")]
    NoExactSolution,

    #[error("finite-difference stencil at ({}, {}) touches nodes with no computed value", at.x, at.y)]
    IncompleteStencil { at: Vec2 },

    #[error("Newton iteration did not converge (best residual {residual:.3e} at ({}, {}))", at.x, at.y)]
    NewtonDiverged { at: Vec2, residual: f64 },

    #[error("point ({}, {}) is not a saddle of the drift field", at.x, at.y)]
    NotASaddle { at: Vec2 },

    #[error("Hessian of the quasi-potential at the equilibrium is not positive definite (det = {det:.3e})")]
    DegenerateHessian { det: f64 },

    #[error("path tracing failed: {0}")]
    PathTracing(String),

    #[error("field file format error: {0}")]
    FieldFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
