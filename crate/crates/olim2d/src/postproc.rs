//! Post-processing of a solved quasi-potential field: gradient
//! reconstruction, minimum action path tracing, field decomposition,
//! Hamilton-Jacobi residuals, and error metrics against exact solutions.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Label;
use crate::math::Vec2;
use crate::model::Model;
use crate::solver::SolveResult;

/// A polyline with cumulative arc length per vertex.
#[derive(Debug, Clone, Default)]
pub struct Path {
    pub vertices: Vec<Vec2>,
    pub arc_length: Vec<f64>,
}

impl Path {
    /// Append a vertex; coincident consecutive points are dropped so arc
    /// lengths stay strictly increasing.
    pub fn push(&mut self, p: Vec2) {
        match self.vertices.last() {
            Some(&q) if (p - q).norm() == 0.0 => {}
            Some(&q) => {
                let s = self.arc_length.last().unwrap() + (p - q).norm();
                self.vertices.push(p);
                self.arc_length.push(s);
            }
            None => {
                self.vertices.push(p);
                self.arc_length.push(0.0);
            }
        }
    }

    pub fn total_length(&self) -> f64 {
        self.arc_length.last().copied().unwrap_or(0.0)
    }

    /// Reversed copy, arc length re-accumulated from the new start.
    pub fn reversed(&self) -> Path {
        let mut out = Path::default();
        for &p in self.vertices.iter().rev() {
            out.push(p);
        }
        out
    }

    /// One `x,y,arclength` row per vertex.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x,y,arclength")?;
        for (p, s) in self.vertices.iter().zip(&self.arc_length) {
            writeln!(w, "{},{},{}", p.x, p.y, s)?;
        }
        Ok(())
    }
}

/// Central differences in the interior of the finite region, one-sided where
/// only one neighbor is finite, `NaN` where the node itself or both its
/// neighbors in some direction are not finite.
pub fn gradient_field(u: &ScalarField) -> VectorField {
    let g = u.grid;
    let nan = Vec2::new(f64::NAN, f64::NAN);
    let mut out = VectorField::filled(g, nan);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = u.at(i, j);
            if !c.is_finite() {
                continue;
            }
            let dx = one_dimensional_difference(
                if i > 0 { u.at(i - 1, j) } else { f64::INFINITY },
                c,
                if i + 1 < g.nx { u.at(i + 1, j) } else { f64::INFINITY },
                g.h1,
            );
            let dy = one_dimensional_difference(
                if j > 0 { u.at(i, j - 1) } else { f64::INFINITY },
                c,
                if j + 1 < g.ny { u.at(i, j + 1) } else { f64::INFINITY },
                g.h2,
            );
            if let (Some(dx), Some(dy)) = (dx, dy) {
                out.data[g.index(i, j)] = Vec2::new(dx, dy);
            }
        }
    }
    out
}

#[inline]
fn one_dimensional_difference(left: f64, center: f64, right: f64, h: f64) -> Option<f64> {
    match (left.is_finite(), right.is_finite()) {
        (true, true) => Some((right - left) / (2.0 * h)),
        (true, false) => Some((center - left) / h),
        (false, true) => Some((right - center) / h),
        (false, false) => None,
    }
}

/// How a MAP trace ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapStatus {
    /// Ended within `2h` of the attractor point.
    ReachedAttractor,
    /// Step budget exhausted.
    MaxSteps,
    /// Left the region where `u` and its gradient are available.
    LeftComputedRegion,
    /// The descent direction vanished away from the attractor.
    Stalled,
}

/// A traced path plus its termination status.
#[derive(Debug, Clone)]
pub struct MapTrace {
    pub path: Path,
    pub status: MapStatus,
}

/// Trace the minimum action path from `start` down to the attractor by
/// integrating the unit-speed descent field
/// `-(b + (sigma sigma') grad U) / || b + (sigma sigma') grad U ||`
/// with fixed-step RK4. The gradient is bilinearly interpolated from the
/// node-centered `grad` field.
pub fn trace_map<M: Model + ?Sized>(
    model: &M,
    grad: &VectorField,
    attractor: Vec2,
    start: Vec2,
    step: f64,
    max_steps: usize,
) -> Result<MapTrace> {
    let h = grad.grid.h;
    let rhs = |p: Vec2| -> Option<Vec2> {
        let gu = grad.interpolate(p)?;
        let sigma = model.sigma(p);
        Some(model.drift(p) + sigma * sigma.transpose() * gu)
    };
    if grad.interpolate(start).is_none() {
        return Err(Error::OutsideComputedRegion { at: start });
    }

    let mut path = Path::default();
    let mut p = start;
    path.push(p);
    let mut status = MapStatus::MaxSteps;
    for _ in 0..max_steps {
        if (p - attractor).norm() <= 2.0 * h {
            status = MapStatus::ReachedAttractor;
            break;
        }
        let dir = |q: Vec2| -> std::result::Result<Vec2, MapStatus> {
            let v = rhs(q).ok_or(MapStatus::LeftComputedRegion)?;
            let n = v.norm();
            if n < 1e-12 {
                return Err(MapStatus::Stalled);
            }
            Ok(-v / n)
        };
        let k = match (|| {
            let k1 = dir(p)?;
            let k2 = dir(p + 0.5 * step * k1)?;
            let k3 = dir(p + 0.5 * step * k2)?;
            let k4 = dir(p + step * k3)?;
            Ok((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
        })() {
            Ok(k) => k,
            Err(s) => {
                status = s;
                break;
            }
        };
        p += step * k;
        if grad.interpolate(p).is_none() {
            status = MapStatus::LeftComputedRegion;
            break;
        }
        path.push(p);
    }
    if status == MapStatus::MaxSteps && (p - attractor).norm() <= 2.0 * h {
        status = MapStatus::ReachedAttractor;
    }
    Ok(MapTrace { path, status })
}

/// The default MAP step budget for an `nx` by `ny` mesh.
pub fn default_map_steps(nx: usize, ny: usize) -> usize {
    20 * (nx + ny)
}

/// Hamilton-Jacobi residual `r = grad(U)' (sigma sigma') grad(U) + 2 b . grad(U)`
/// per node; `NaN` where the gradient is unavailable.
pub fn hj_residual<M: Model + ?Sized>(u: &ScalarField, model: &M) -> ScalarField {
    let grad = gradient_field(u);
    let g = u.grid;
    let mut out = ScalarField::filled(g, f64::NAN);
    for node in 0..g.n_nodes() {
        let gu = grad.data[node];
        if !gu.x.is_finite() || !gu.y.is_finite() {
            continue;
        }
        let p = g.position(node);
        let sigma = model.sigma(p);
        let cov = sigma * sigma.transpose();
        out.data[node] = (cov * gu).dot(&gu) + 2.0 * model.drift(p).dot(&gu);
    }
    out
}

/// The rotational component in the isotropic convention `l = b + grad(U)/2`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub l: VectorField,
    /// Whether `sigma` was the identity at every sampled node; when false the
    /// isotropic convention is only a diagnostic, not an orthogonal split.
    pub isotropic: bool,
}

pub fn decompose_field<M: Model + ?Sized>(u: &ScalarField, model: &M) -> Decomposition {
    let grad = gradient_field(u);
    let g = u.grid;
    let nan = Vec2::new(f64::NAN, f64::NAN);
    let mut l = VectorField::filled(g, nan);
    let mut isotropic = true;
    for node in 0..g.n_nodes() {
        let p = g.position(node);
        if isotropic {
            let sigma = model.sigma(p);
            if (sigma - crate::math::Mat2::identity()).norm() > 1e-12 {
                isotropic = false;
            }
        }
        let gu = grad.data[node];
        if gu.x.is_finite() && gu.y.is_finite() {
            l.data[node] = model.drift(p) + 0.5 * gu;
        }
    }
    Decomposition { l, isotropic }
}

/// Error metrics of a computed field against the model's exact solution.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub max_abs: f64,
    pub rms: f64,
    /// `max_abs` divided by the maximum computed quasi-potential.
    pub normalized_max_abs: f64,
    pub n_valid_nodes: usize,
}

/// Compare against `exact_u` over nodes whose value is final; Considered
/// nodes are excluded.
pub fn error_report<M: Model + ?Sized>(result: &SolveResult, model: &M) -> Result<ErrorReport> {
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0;
    let mut max_u = f64::NEG_INFINITY;
    let mut n = 0usize;
    for node in 0..result.grid.n_nodes() {
        if result.label[node] < Label::AcceptedFront || !result.u[node].is_finite() {
            continue;
        }
        let exact = model
            .exact_u(result.grid.position(node))
            .ok_or(Error::NoExactSolution)?;
        let err = (result.u[node] - exact).abs();
        max_abs = max_abs.max(err);
        sum_sq += err * err;
        max_u = max_u.max(result.u[node]);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInitialization);
    }
    Ok(ErrorReport {
        max_abs,
        rms: (sum_sq / n as f64).sqrt(),
        normalized_max_abs: max_abs / max_u,
        n_valid_nodes: n,
    })
}
