//! Nonlinear test model with position-dependent anisotropic diffusion.
//!
//! The diffusion matrix is the Jacobian of the Cartesian-to-polar variable
//! change, so in polar coordinates the SDE has unit diffusion and the drift
//! splits cleanly into a potential part and a rotational part:
//!
//! ```text
//! r'   = r (1 - r^2/9) + sin(phi) / r
//! phi' = (1 - r^2/9) - sin(phi)
//! ```
//!
//! The quasi-potential with respect to the stable equilibrium `(3, 0)` is
//! known in closed form, which makes this the reference problem for
//! convergence studies. The eigenvalues of `A(x) = (sigma sigma')^{-1}` are
//! `1` and `1/||x||^2`, so the anisotropy varies across the domain.

use crate::math::{Mat2, Vec2};
use crate::model::{AttractorSpec, Model};

/// Polar-coordinates nonlinear test model. Must not be queried at the origin.
#[derive(Debug, Clone)]
pub struct PolarModel {
    attractor: AttractorSpec,
}

impl Default for PolarModel {
    fn default() -> Self {
        Self::new()
    }
}

impl PolarModel {
    pub fn new() -> Self {
        Self { attractor: AttractorSpec::StablePoint(Vec2::new(3.0, 0.0)) }
    }

    #[inline]
    fn radius(x: Vec2) -> f64 {
        let r = x.norm();
        assert!(r >= 1e-8, "polar model queried at the origin singularity");
        r
    }

    /// Analytic gradient of the exact quasi-potential.
    pub fn exact_gradient(&self, x: Vec2) -> Vec2 {
        let r = Self::radius(x);
        let rhat = x / r;
        let phihat = Vec2::new(-x.y / r, x.x / r);
        let dp = 2.0 * r * r * r / 9.0 - 2.0 * r;
        let dq = 2.0 * (x.y / r);
        dp * rhat + (dq / r) * phihat
    }

    /// The rotational component `l(x)` of the polar-frame decomposition,
    /// pushed to Cartesian coordinates; orthogonal to the exact gradient.
    pub fn rotational_component(&self, x: Vec2) -> Vec2 {
        let r = Self::radius(x);
        let r3 = r * r * r;
        let c = r * r / 9.0 - 1.0;
        Vec2::new(x.y * c + x.x * x.y / r3, -x.x * c + x.y * x.y / r3)
    }
}

impl Model for PolarModel {
    fn drift(&self, x: Vec2) -> Vec2 {
        let r = Self::radius(x);
        let sin_phi = x.y / r;
        let beta = 1.0 - r * r / 9.0;
        let f = beta + sin_phi / (r * r);
        let g = sin_phi - beta;
        Vec2::new(x.y * g + x.x * f, -x.x * g + x.y * f)
    }

    fn sigma(&self, x: Vec2) -> Mat2 {
        let r = Self::radius(x);
        Mat2::new(x.x / r, -x.y, x.y / r, x.x)
    }

    fn attractor(&self) -> &AttractorSpec {
        &self.attractor
    }

    fn exact_u(&self, x: Vec2) -> Option<f64> {
        let r = Self::radius(x);
        let r2 = r * r;
        Some(r2 * (r2 / 18.0 - 1.0) + 4.5 + 2.0 * (1.0 - x.x / r))
    }

    fn name(&self) -> &str {
        "polar"
    }
}
