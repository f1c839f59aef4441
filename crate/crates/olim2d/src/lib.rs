//! Quasi-potential solver for two-dimensional SDEs
//! `dx = b(x) dt + sigma(x) sqrt(eps) dW` with variable, anisotropic
//! diffusion, on a regular rectangular grid.
//!
//! The solver is an ordered line integral method: it advances an accepted
//! front outward from an attractor, computing at each node the minimal
//! geometric action over short ray and triangle updates with midpoint
//! quadrature. On top of the solved field the crate traces minimum action
//! paths and estimates transition rates between metastable states.
//!
//! Start with [`solver::solve`] and one of the built-in [`models`]:
//!
//! ```
//! use olim2d::models::PolarModel;
//! use olim2d::solver::{solve, BoundaryPolicy, SolverConfig};
//! use olim2d::grid::Domain;
//!
//! let model = PolarModel::new();
//! let domain = Domain::new(-3.8, 4.2, -4.0, 4.0)?;
//! let config = SolverConfig::square(64, 6, domain, BoundaryPolicy::StopOnBoundary);
//! let result = solve(&model, &config)?;
//! assert!(result.max_u() > 0.0);
//! # Ok::<(), olim2d::error::Error>(())
//! ```

pub mod action;
pub mod error;
pub mod field;
pub mod grid;
pub mod heap;
pub mod io;
pub mod math;
pub mod model;
pub mod models;
pub mod postproc;
pub mod rates;
pub mod rootfind;
pub mod solver;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests so the book cannot drift from
// the crate. One module per chapter keeps failures attributable.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/background.md")]
    mod background {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/maps_rates.md")]
    mod maps_rates {}
    #[doc = include_str!("../../../book/src/files_cli.md")]
    mod files_cli {}
}
pub use math::{Mat2, Vec2};
pub use model::{AttractorSpec, Model};
pub use solver::{solve, SolveResult, SolverConfig};
