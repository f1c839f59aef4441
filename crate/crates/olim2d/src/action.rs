//! The local action kernel: A-weighted norms, the midpoint-rule geometric
//! action on straight segments, and the one-point and triangle update rules.
//!
//! The geometric action of a path is
//! `S = \int (||b||_A ||psi'||_A - <psi', b>_A) ds` with
//! `A = (sigma sigma^T)^{-1}`; every update below minimizes a midpoint-rule
//! approximation of it over straight segments.

use crate::error::{Error, Result};
use crate::math::{Mat2, Vec2};
use crate::model::{covariance_inverse, covariance_inverse_of, Model};
use crate::rootfind::{hybrid_secant_bisection, RootStatus};

/// Bracket tolerance in `s` for the triangle root solve.
pub const TRIANGLE_TOL_S: f64 = 1e-12;
/// Iteration budget for the triangle root solve.
pub const TRIANGLE_MAX_ITER: usize = 100;

/// `sqrt(v' A v)` for symmetric positive semidefinite `A`.
///
/// Small negative values of the quadratic form (rounding) are clamped to
/// zero; values below `-1e-14` report a non-PD error.
pub fn a_norm(v: Vec2, a: &Mat2) -> Result<f64> {
    let q = (a * v).dot(&v);
    if q < -1e-14 {
        return Err(Error::NotPositiveDefinite { value: q });
    }
    Ok(q.max(0.0).sqrt())
}

/// `<u, v>_A = u' A v`.
#[inline]
pub fn a_inner(u: Vec2, v: Vec2, a: &Mat2) -> f64 {
    (a * v).dot(&u)
}

/// Midpoint-rule geometric action of the straight segment `[x0, x]`:
/// `||x - x0||_Am ||b(xm)||_Am - <x - x0, b(xm)>_Am` with `xm` the segment
/// midpoint. Nonnegative by the Cauchy-Schwarz inequality.
pub fn geometric_action_segment<M: Model + ?Sized>(x0: Vec2, x: Vec2, model: &M) -> Result<f64> {
    let d = x - x0;
    if d == Vec2::zeros() {
        return Ok(0.0);
    }
    let xm = 0.5 * (x0 + x);
    let (bm, sigma) = model.drift_sigma(xm);
    let am = covariance_inverse_of(&sigma, xm)?;
    Ok(a_norm(d, &am)? * a_norm(bm, &am)? - a_inner(d, bm, &am))
}

/// One-point update `Q_1pt(x0, x) = U0 + S_midpoint([x0, x])`.
pub fn one_point_update<M: Model + ?Sized>(x0: Vec2, x: Vec2, u0: f64, model: &M) -> Result<f64> {
    Ok(u0 + geometric_action_segment(x0, x, model)?)
}

/// Data for a triangle update at `x` from the accepted pair `(x0, x1)`.
///
/// The midpoint fields `b_m*`, `A_m*` are the model evaluated at the
/// midpoints of `[x0, x]` and `[x1, x]`; along the edge they are linearly
/// interpolated rather than re-evaluated.
#[derive(Debug, Clone)]
pub struct TriangleUpdateProblem {
    pub x0: Vec2,
    pub x1: Vec2,
    pub x: Vec2,
    pub u0: f64,
    pub u1: f64,
    pub b_m0: Vec2,
    pub b_m1: Vec2,
    pub a_m0: Mat2,
    pub a_m1: Mat2,
}

impl TriangleUpdateProblem {
    /// Evaluate the model at both segment midpoints and assemble the problem.
    pub fn assemble<M: Model + ?Sized>(
        x0: Vec2,
        x1: Vec2,
        x: Vec2,
        u0: f64,
        u1: f64,
        model: &M,
    ) -> Result<Self> {
        let m0 = 0.5 * (x0 + x);
        let m1 = 0.5 * (x1 + x);
        Ok(Self {
            x0,
            x1,
            x,
            u0,
            u1,
            b_m0: model.drift(m0),
            b_m1: model.drift(m1),
            a_m0: covariance_inverse(model, m0)?,
            a_m1: covariance_inverse(model, m1)?,
        })
    }

    /// Twice the triangle area; used to reject collinear stencils.
    pub fn doubled_area(&self) -> f64 {
        let e0 = self.x1 - self.x0;
        let e1 = self.x - self.x0;
        (e0.x * e1.y - e0.y * e1.x).abs()
    }

    #[inline]
    fn at(&self, s: f64) -> (Vec2, Vec2, Mat2) {
        let xs = self.x0 + s * (self.x1 - self.x0);
        let b = self.b_m0 + s * (self.b_m1 - self.b_m0);
        let a = self.a_m0 + s * (self.a_m1 - self.a_m0);
        (self.x - xs, b, a)
    }

    /// The objective `U0 + s (U1 - U0) + ||x - x_s||_As ||b_s||_As
    /// - <x - x_s, b_s>_As` of the constrained minimization over `s in [0, 1]`.
    pub fn objective(&self, s: f64) -> Result<f64> {
        let (v, b, a) = self.at(s);
        Ok(self.u0 + s * (self.u1 - self.u0) + a_norm(v, &a)? * a_norm(b, &a)? - a_inner(v, b, &a))
    }

    /// Derivative of [`Self::objective`] with respect to `s`.
    ///
    /// Near-vanishing `||b_s||_As` or `||x - x_s||_As` denominators are
    /// clamped so the sign of the derivative follows the numerator instead of
    /// producing NaN.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        let (v, b, a) = self.at(s);
        let dx = self.x0 - self.x1;
        let db = self.b_m1 - self.b_m0;
        let da = self.a_m1 - self.a_m0;
        let vnorm = a_norm(v, &a)?.max(1e-300);
        let bnorm = a_norm(b, &a)?.max(1e-300);
        let term_v = a_inner(v, dx, &a) + 0.5 * (da * v).dot(&v);
        let term_b = a_inner(b, db, &a) + 0.5 * (da * b).dot(&b);
        let term_c = a_inner(dx, b, &a) + a_inner(v, db, &a) + (da * b).dot(&v);
        Ok((self.u1 - self.u0) + (bnorm / vnorm) * term_v + (vnorm / bnorm) * term_b - term_c)
    }

    /// Solve the triangle update. Returns `None` when the derivative does not
    /// change sign over `[0, 1]` (no interior minimizer) or the root solve
    /// fails to converge.
    pub fn solve(&self) -> Result<Option<f64>> {
        let d0 = self.derivative(0.0)?;
        let d1 = self.derivative(1.0)?;
        if !(d0 * d1 < 0.0) {
            return Ok(None);
        }
        let tol_f = 1e-12 * (1.0 + (self.u1 - self.u0).abs());
        let mut failed = false;
        let (s_star, status) = hybrid_secant_bisection(
            |s| match self.derivative(s) {
                Ok(v) => v,
                Err(_) => {
                    failed = true;
                    0.0
                }
            },
            0.0,
            1.0,
            TRIANGLE_TOL_S,
            tol_f,
            TRIANGLE_MAX_ITER,
        )?;
        if failed || status == RootStatus::MaxIterations {
            return Ok(None);
        }
        Ok(Some(self.objective(s_star)?))
    }
}
