//! The problem-definition interface: drift, diffusion, attractor data.

use crate::error::{Error, Result};
use crate::math::{eigenvalue_real_parts, rotation, Mat2, Vec2};

/// The attractor of the deterministic flow with respect to which the
/// quasi-potential is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum AttractorSpec {
    /// Asymptotically stable equilibrium point.
    StablePoint(Vec2),
    /// Sampled limit cycle or heteroclinic set.
    PointSet(Vec<Vec2>),
}

/// A 2D SDE `dx = b(x) dt + sigma(x) sqrt(eps) dW`.
///
/// `sigma(x)` must be invertible everywhere the solver queries it.
pub trait Model {
    /// Drift field `b(x)`.
    fn drift(&self, x: Vec2) -> Vec2;

    /// Diffusion matrix `sigma(x)`.
    fn sigma(&self, x: Vec2) -> Mat2;

    /// Drift and diffusion in one call. Models whose two fields share
    /// expensive intermediate values override this.
    fn drift_sigma(&self, x: Vec2) -> (Vec2, Mat2) {
        (self.drift(x), self.sigma(x))
    }

    /// The attractor the quasi-potential is measured from.
    fn attractor(&self) -> &AttractorSpec;

    /// Jacobian of the drift. The default is a central finite difference.
    fn jacobian(&self, x: Vec2) -> Mat2 {
        fd_jacobian(|p| self.drift(p), x)
    }

    /// Analytic quasi-potential, when known.
    fn exact_u(&self, _x: Vec2) -> Option<f64> {
        None
    }

    /// Registered model name.
    fn name(&self) -> &str;
}

impl<M: Model + ?Sized> Model for &M {
    fn drift(&self, x: Vec2) -> Vec2 {
        (**self).drift(x)
    }
    fn sigma(&self, x: Vec2) -> Mat2 {
        (**self).sigma(x)
    }
    fn drift_sigma(&self, x: Vec2) -> (Vec2, Mat2) {
        (**self).drift_sigma(x)
    }
    fn attractor(&self) -> &AttractorSpec {
        (**self).attractor()
    }
    fn jacobian(&self, x: Vec2) -> Mat2 {
        (**self).jacobian(x)
    }
    fn exact_u(&self, x: Vec2) -> Option<f64> {
        (**self).exact_u(x)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Inverse covariance `A(x) = (sigma sigma^T)^{-1}`, symmetrized after
/// inversion. Errors when `sigma(x)` is numerically singular.
pub fn covariance_inverse<M: Model + ?Sized>(model: &M, x: Vec2) -> Result<Mat2> {
    covariance_inverse_of(&model.sigma(x), x)
}

/// Inverse covariance from an already evaluated `sigma(x)`; `x` is only used
/// in the error report.
pub fn covariance_inverse_of(sigma: &Mat2, x: Vec2) -> Result<Mat2> {
    let det = sigma.determinant();
    if det.abs() <= 1e-14 * sigma.norm_squared() {
        return Err(Error::SingularDiffusion { at: x });
    }
    let cov = sigma * sigma.transpose();
    let a = cov.try_inverse().ok_or(Error::SingularDiffusion { at: x })?;
    Ok(symmetrize(&a))
}

#[inline]
pub fn symmetrize(m: &Mat2) -> Mat2 {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Mat2::new(m[(0, 0)], off, off, m[(1, 1)])
}

/// Constant diffusion matrix with eigenvalues `{1, gamma}` and eigenvector
/// angle `alpha`: `R(alpha) diag(1, gamma) R(alpha)^T`, or with `similarity`
/// set, `R(alpha) diag(1, gamma) R(alpha)^{-1}`. The two forms coincide since
/// `R` is orthogonal.
pub fn rotation_scaled_sigma(alpha: f64, gamma: f64, similarity: bool) -> Result<Mat2> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue ratio gamma must be positive, got {gamma}"
        )));
    }
    let r = rotation(alpha);
    let d = Mat2::new(1.0, 0.0, 0.0, gamma);
    let m = if similarity {
        r * d * r.try_inverse().expect("rotation is invertible")
    } else {
        r * d * r.transpose()
    };
    Ok(symmetrize(&m))
}

/// Central finite-difference Jacobian with per-component step
/// `eps_machine^{1/3} * max(1, |x_i|)`.
pub fn fd_jacobian<F: Fn(Vec2) -> Vec2>(f: F, x: Vec2) -> Mat2 {
    let mut out = Mat2::zeros();
    for j in 0..2 {
        let h = f64::EPSILON.powf(1.0 / 3.0) * x[j].abs().max(1.0);
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let d = (f(xp) - f(xm)) / (xp[j] - xm[j]);
        out[(0, j)] = d.x;
        out[(1, j)] = d.y;
    }
    out
}

/// Damped Newton refinement of an equilibrium of `b`, seeded at `seed`.
/// Converges when `||b|| < tol`; errors after `max_iter` damped steps.
pub fn newton_refine_equilibrium<M: Model + ?Sized>(
    model: &M,
    seed: Vec2,
    tol: f64,
    max_iter: usize,
) -> Result<Vec2> {
    let mut x = seed;
    let mut bnorm = model.drift(x).norm();
    for _ in 0..max_iter {
        if bnorm < tol {
            return Ok(x);
        }
        let b = model.drift(x);
        let jac = model.jacobian(x);
        let step = jac
            .try_inverse()
            .map(|ji| -(ji * b))
            .unwrap_or_else(|| -b);
        // Backtrack until the residual decreases.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = x + t * step;
            let cnorm = model.drift(cand).norm();
            if cnorm < bnorm {
                x = cand;
                bnorm = cnorm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if bnorm < tol {
        Ok(x)
    } else {
        Err(Error::NewtonDiverged { at: x, residual: bnorm })
    }
}

/// Check that the drift linearization at `x0` is asymptotically stable.
pub fn require_stable<M: Model + ?Sized>(model: &M, x0: Vec2) -> Result<()> {
    let (r0, r1) = eigenvalue_real_parts(&model.jacobian(x0));
    if r0 < 0.0 && r1 < 0.0 {
        Ok(())
    } else {
        Err(Error::UnstableEquilibrium { at: x0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::symmetric_eigen;

    struct Identity(AttractorSpec);
    impl Model for Identity {
        fn drift(&self, x: Vec2) -> Vec2 {
            -x
        }
        fn sigma(&self, _x: Vec2) -> Mat2 {
            Mat2::identity()
        }
        fn attractor(&self) -> &AttractorSpec {
            &self.0
        }
        fn name(&self) -> &str {
            "identity"
        }
    }

    #[test]
    fn covariance_inverse_of_identity() {
        let m = Identity(AttractorSpec::StablePoint(Vec2::zeros()));
        let a = covariance_inverse(&m, Vec2::new(0.3, -0.2)).unwrap();
        assert!((a - Mat2::identity()).norm() < 1e-15);
    }

    #[test]
    fn covariance_inverse_rejects_rank_deficient_sigma() {
        struct Bad(AttractorSpec);
        impl Model for Bad {
            fn drift(&self, x: Vec2) -> Vec2 {
                -x
            }
            fn sigma(&self, _x: Vec2) -> Mat2 {
                Mat2::new(1.0, 1.0, 1.0, 1.0)
            }
            fn attractor(&self) -> &AttractorSpec {
                &self.0
            }
            fn name(&self) -> &str {
                "bad"
            }
        }
        let m = Bad(AttractorSpec::StablePoint(Vec2::zeros()));
        assert!(matches!(
            covariance_inverse(&m, Vec2::zeros()),
            Err(Error::SingularDiffusion { .. })
        ));
    }

    #[test]
    fn rotation_scaled_sigma_cases() {
        let s = rotation_scaled_sigma(0.0, 2.0, false).unwrap();
        assert!((s - Mat2::new(1.0, 0.0, 0.0, 2.0)).norm() < 1e-15);

        let s = rotation_scaled_sigma(std::f64::consts::FRAC_PI_2, 2.0, false).unwrap();
        assert!((s - Mat2::new(2.0, 0.0, 0.0, 1.0)).norm() < 1e-14);

        // Hand-computed product at alpha = pi/4, gamma = 2.
        let s = rotation_scaled_sigma(std::f64::consts::FRAC_PI_4, 2.0, false).unwrap();
        assert!((s - Mat2::new(1.5, -0.5, -0.5, 1.5)).norm() < 1e-14);

        // Similarity form agrees with the orthogonal form.
        let a = rotation_scaled_sigma(0.37, 2.5, false).unwrap();
        let b = rotation_scaled_sigma(0.37, 2.5, true).unwrap();
        assert!((a - b).norm() < 1e-13);

        assert!(rotation_scaled_sigma(0.0, 0.0, false).is_err());
        assert!(rotation_scaled_sigma(0.0, -1.0, false).is_err());
    }

    #[test]
    fn rotation_scaled_sigma_spectrum() {
        let s = rotation_scaled_sigma(0.3, 3.0, false).unwrap();
        let ((l0, l1), _) = symmetric_eigen(&s);
        assert!((l0 - 1.0).abs() < 1e-13 && (l1 - 3.0).abs() < 1e-13);
    }

    #[test]
    fn fd_jacobian_on_linear_field_is_exact() {
        let j = Mat2::new(-2.0, -10.0, 20.0, -1.0);
        let got = fd_jacobian(|x| j * x, Vec2::new(0.4, -0.3));
        assert!((got - j).norm() < 1e-7);
    }

    #[test]
    fn newton_refines_to_origin() {
        let m = Identity(AttractorSpec::StablePoint(Vec2::zeros()));
        let x = newton_refine_equilibrium(&m, Vec2::new(0.7, -0.4), 1e-12, 100).unwrap();
        assert!(x.norm() < 1e-12);
    }
}
