//! The Maier-Stein bistable field, a standard benchmark for nongradient
//! transition-path problems:
//!
//! ```text
//! b(x) = (x1 - x1^3 - 10 x1 x2^2, -(1 + x1^2) x2)
//! ```
//!
//! Stable equilibria at `(-1, 0)` and `(1, 0)`, saddle at the origin. The
//! diffusion matrix is constant, `Sigma(alpha, gamma)` with eigenvalue ratio
//! `gamma` and rotation `alpha` applied as a similarity transform so that
//! `det Sigma = gamma` is preserved.

use crate::error::Result;
use crate::math::{Mat2, Vec2};
use crate::model::{rotation_scaled_sigma, AttractorSpec, Model};

#[derive(Debug, Clone)]
pub struct MaierSteinModel {
    sigma: Mat2,
    attractor: AttractorSpec,
}

impl MaierSteinModel {
    /// Model with `Sigma = R(alpha) diag(1, gamma) R(alpha)'` and the
    /// attractor at `(-1, 0)`.
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        Ok(Self {
            sigma: rotation_scaled_sigma(alpha, gamma, true)?,
            attractor: AttractorSpec::StablePoint(Vec2::new(-1.0, 0.0)),
        })
    }

    /// The saddle point between the two stable equilibria.
    pub fn saddle() -> Vec2 {
        Vec2::zeros()
    }
}

impl Model for MaierSteinModel {
    fn drift(&self, x: Vec2) -> Vec2 {
        Vec2::new(
            x.x - x.x * x.x * x.x - 10.0 * x.x * x.y * x.y,
            -(1.0 + x.x * x.x) * x.y,
        )
    }

    fn sigma(&self, _x: Vec2) -> Mat2 {
        self.sigma
    }

    fn attractor(&self) -> &AttractorSpec {
        &self.attractor
    }

    fn jacobian(&self, x: Vec2) -> Mat2 {
        Mat2::new(
            1.0 - 3.0 * x.x * x.x - 10.0 * x.y * x.y,
            -20.0 * x.x * x.y,
            -2.0 * x.x * x.y,
            -(1.0 + x.x * x.x),
        )
    }

    fn name(&self) -> &str {
        "maier-stein"
    }
}
