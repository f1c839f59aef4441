//! Linear SDE `dx = J x dt + Sigma sqrt(eps) dW` with a constant anisotropic
//! diffusion matrix `Sigma(alpha, gamma)` and a closed-form quasi-potential.

use crate::error::Result;
use crate::math::{Mat2, Vec2};
use crate::model::{rotation_scaled_sigma, AttractorSpec, Model};
use crate::solver::{linear_quasipotential_matrix, QuasiPotentialMatrix};

/// The default drift Jacobian: its rotational component is about ten times
/// stronger than the potential one, which makes the characteristics spiral.
pub const DEFAULT_J: [[f64; 2]; 2] = [[-2.0, -10.0], [20.0, -1.0]];

/// Linear test model: stable spiral at the origin, constant diffusion with
/// eigenvalues `{1, gamma}` rotated by `alpha`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    j: Mat2,
    sigma: Mat2,
    qp: QuasiPotentialMatrix,
    attractor: AttractorSpec,
}

impl LinearModel {
    /// Default drift matrix with `Sigma = Sigma(alpha, gamma)`.
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        Self::with_jacobian(
            Mat2::new(DEFAULT_J[0][0], DEFAULT_J[0][1], DEFAULT_J[1][0], DEFAULT_J[1][1]),
            alpha,
            gamma,
        )
    }

    pub fn with_jacobian(j: Mat2, alpha: f64, gamma: f64) -> Result<Self> {
        let sigma = rotation_scaled_sigma(alpha, gamma, false)?;
        let qp = linear_quasipotential_matrix(&j, &sigma)?;
        Ok(Self { j, sigma, qp, attractor: AttractorSpec::StablePoint(Vec2::zeros()) })
    }

    /// Exact quasi-potential matrix `M` with `U(x) = x' M x`.
    pub fn quasipotential_matrix(&self) -> &QuasiPotentialMatrix {
        &self.qp
    }
}

impl Model for LinearModel {
    fn drift(&self, x: Vec2) -> Vec2 {
        self.j * x
    }

    fn sigma(&self, _x: Vec2) -> Mat2 {
        self.sigma
    }

    fn attractor(&self) -> &AttractorSpec {
        &self.attractor
    }

    fn jacobian(&self, _x: Vec2) -> Mat2 {
        self.j
    }

    fn exact_u(&self, x: Vec2) -> Option<f64> {
        Some(self.qp.evaluate(Vec2::zeros(), x))
    }

    fn name(&self) -> &str {
        "linear"
    }
}
