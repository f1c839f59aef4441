//! Sharp expected-transition-time estimation between metastable states:
//!
//! ```text
//! T = (2 pi / lambda+) sqrt(|det H(x*)| / det H(x0))
//!     exp(int F dt) exp(U(x*) / eps)
//! ```
//!
//! with `H` the Hessian of the quasi-potential, `lambda+` the unstable
//! eigenvalue of the drift Jacobian at the saddle `x*`, and the correction
//! integrand
//!
//! ```text
//! F = div(b) + a . grad(U) + tr((sigma sigma') H_U) / 2,
//! a_i = sum_j d_j (sigma sigma')_ij
//! ```
//!
//! integrated in *travel time* along the minimum action path from the
//! equilibrium `x0` to `x*`: `int F dt = int F / |v| ds` with
//! `v = b + (sigma sigma') grad U` the uphill characteristic velocity. The
//! integral converges because at both endpoints any quadratic solution of the
//! stationary Hamilton-Jacobi equation satisfies the trace identity
//! `tr((sigma sigma') H_U) / 2 = -div(b)`, which forces `F -> 0` there; for
//! gradient drifts with unit covariance `F == 0` everywhere and the estimate
//! reduces to the classical Eyring-Kramers formula.
//!
//! Evaluating `F` needs the Hessian of `U` along the path. Second differences
//! of the solved field are noise-dominated on fine grids, so the production
//! path transports the Hessian along the MAP instead: the momentum is
//! reconstructed pointwise from the path tangent (`momentum_on_path`) and the
//! Hessian obeys a matrix Riccati equation in travel time, seeded with the
//! analytic equilibrium Hessian (`equilibrium_hessian`) and integrated
//! forward, and seeded with the analytic saddle Hessian (`saddle_hessian`)
//! and integrated backward, the two halves joined where they agree best.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::math::{Mat2, Vec2};
use crate::model::{newton_refine_equilibrium, Model};
use crate::postproc::Path;
use crate::solver::linear_quasipotential_matrix;

/// Nine-point second-difference Hessian of `u` at the node nearest `at`,
/// with stencil spacing `m` mesh steps. Widening `m` trades truncation error
/// for robustness against first-order solver noise.
pub fn hessian_of_u(u: &ScalarField, at: Vec2, m: usize) -> Result<Mat2> {
    let g = u.grid;
    let node = g.nearest_node(at).ok_or(Error::OutsideComputedRegion { at })?;
    let (i, j) = g.ij(node);
    let m_ = m as isize;
    let sample = |di: isize, dj: isize| -> Result<f64> {
        let (p, q) = (i as isize + di * m_, j as isize + dj * m_);
        if p < 0 || q < 0 || p >= g.nx as isize || q >= g.ny as isize {
            return Err(Error::IncompleteStencil { at });
        }
        let v = u.at(p as usize, q as usize);
        if !v.is_finite() {
            return Err(Error::IncompleteStencil { at });
        }
        Ok(v)
    };
    let hx = m as f64 * g.h1;
    let hy = m as f64 * g.h2;
    let c = sample(0, 0)?;
    let uxx = (sample(1, 0)? - 2.0 * c + sample(-1, 0)?) / (hx * hx);
    let uyy = (sample(0, 1)? - 2.0 * c + sample(0, -1)?) / (hy * hy);
    let uxy = (sample(1, 1)? - sample(1, -1)? - sample(-1, 1)? + sample(-1, -1)?)
        / (4.0 * hx * hy);
    Ok(Mat2::new(uxx, uxy, uxy, uyy))
}

/// The correction integrand `F` at `x`, from the interpolated gradient and a
/// mesh second-difference Hessian of `u` with stencil multiplier `m`. The
/// divergence of the covariance entries is taken by central differences of
/// the model. Useful as a grid-based diagnostic; the production estimate
/// evaluates `F` from transported quantities instead.
pub fn f_integrand<M: Model + ?Sized>(
    model: &M,
    u: &ScalarField,
    grad: &VectorField,
    x: Vec2,
    m: usize,
) -> Result<f64> {
    let gu = grad
        .interpolate(x)
        .ok_or(Error::OutsideComputedRegion { at: x })?;
    let div_b = model.jacobian(x).trace();

    // a_i = sum_j d_j (sigma sigma')_ij by central differences.
    let cov = |p: Vec2| {
        let s = model.sigma(p);
        s * s.transpose()
    };
    let mut a = Vec2::zeros();
    for j in 0..2 {
        let h = u.grid.h * 0.5;
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let d = (cov(xp) - cov(xm)) / (xp[j] - xm[j]);
        a.x += d[(0, j)];
        a.y += d[(1, j)];
    }

    let h_u = hessian_of_u(u, x, m)?;
    Ok(div_b + a.dot(&gu) + 0.5 * (cov(x) * h_u).trace())
}

/// Newton-refine a saddle of the drift from `seed`; the Jacobian at the
/// result must have one positive and one negative eigenvalue direction
/// (negative determinant).
pub fn find_saddle<M: Model + ?Sized>(model: &M, seed: Vec2) -> Result<Vec2> {
    let x = newton_refine_equilibrium(model, seed, 1e-10, 100)?;
    if model.jacobian(x).determinant() >= 0.0 {
        return Err(Error::NotASaddle { at: x });
    }
    Ok(x)
}

/// Analytic Hessian of the quasi-potential at a stable equilibrium `x0`,
/// from the Lyapunov-type matrix equation of the linearized dynamics.
pub fn equilibrium_hessian<M: Model + ?Sized>(model: &M, x0: Vec2) -> Result<Mat2> {
    let qp = linear_quasipotential_matrix(&model.jacobian(x0), &model.sigma(x0))?;
    Ok(2.0 * qp.m)
}

/// Analytic Hessian of the quasi-potential at a saddle `x_s`: the symmetric
/// solution `M` of `M A M + (J' M + M J)/2 = 0` with `A = sigma sigma'` and
/// negative determinant, found by Newton iteration from scattered seeds; the
/// returned Hessian is `2 M`.
pub fn saddle_hessian<M: Model + ?Sized>(model: &M, x_s: Vec2) -> Result<Mat2> {
    let j = model.jacobian(x_s);
    let s = model.sigma(x_s);
    let abar = s * s.transpose();
    let res3 = |v: &[f64; 3]| -> [f64; 3] {
        let m = Mat2::new(v[0], v[1], v[1], v[2]);
        let r = m * abar * m + 0.5 * (j.transpose() * m + m * j);
        [r[(0, 0)], r[(0, 1)], r[(1, 1)]]
    };
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut rand = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64 - 0.5) * 2.0
    };
    let scale = j.norm() / abar.norm().max(f64::MIN_POSITIVE);
    for _ in 0..400 {
        let mut v = [rand() * scale, rand() * scale, rand() * scale];
        let mut converged = false;
        for _ in 0..200 {
            let f = res3(&v);
            if (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt() < 1e-13 * scale * j.norm() {
                converged = true;
                break;
            }
            let mut jm = nalgebra::Matrix3::<f64>::zeros();
            for c in 0..3 {
                let h = 1e-7 * scale.max(1e-12);
                let mut vp = v;
                vp[c] += h;
                let fp = res3(&vp);
                for r in 0..3 {
                    jm[(r, c)] = (fp[r] - f[r]) / h;
                }
            }
            let fv = nalgebra::Vector3::new(f[0], f[1], f[2]);
            match jm.lu().solve(&-fv) {
                Some(d) => {
                    v[0] += d[0];
                    v[1] += d[1];
                    v[2] += d[2];
                }
                None => break,
            }
        }
        if converged {
            let h = 2.0 * Mat2::new(v[0], v[1], v[1], v[2]);
            if h.determinant() < -1e-10 * scale * scale {
                return Ok(h);
            }
        }
    }
    Err(Error::DegenerateHessian { det: 0.0 })
}

/// Momentum `p = grad U` and characteristic speed `|v|` reconstructed
/// pointwise on a MAP from the unit tangent `tau`: on the exact path,
/// `p = A^{-1} (mu tau - b)` with `mu = sqrt(b' A^{-1} b / tau' A^{-1} tau)`
/// and `A = sigma sigma'`, and the uphill velocity `v = b + A p = mu tau`.
pub fn momentum_on_path<M: Model + ?Sized>(model: &M, x: Vec2, tau: Vec2) -> Result<(Vec2, f64)> {
    let s = model.sigma(x);
    let abar = s * s.transpose();
    let ainv = abar
        .try_inverse()
        .ok_or(Error::SingularDiffusion { at: x })?;
    let b = model.drift(x);
    let denom = (ainv * tau).dot(&tau);
    if denom <= 0.0 {
        return Err(Error::SingularDiffusion { at: x });
    }
    let mu = (((ainv * b).dot(&b)) / denom).sqrt();
    Ok((ainv * (mu * tau - b), mu))
}

/// Finite-difference geometry of a model: derivatives of the covariance and
/// drift needed by the Riccati transport of the Hessian.
struct Geometry<'a, M: Model + ?Sized> {
    model: &'a M,
}

impl<M: Model + ?Sized> Geometry<'_, M> {
    fn abar(&self, x: Vec2) -> Mat2 {
        let s = self.model.sigma(x);
        s * s.transpose()
    }
    fn d_abar(&self, x: Vec2) -> [Mat2; 2] {
        let h = 1e-4 * (1.0 + x.norm());
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        [
            (self.abar(x + ex) - self.abar(x - ex)) / (2.0 * h),
            (self.abar(x + ey) - self.abar(x - ey)) / (2.0 * h),
        ]
    }
    fn dd_abar(&self, x: Vec2) -> [Mat2; 3] {
        let h = 1e-3 * (1.0 + x.norm());
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        let c = self.abar(x);
        let dxx = (self.abar(x + ex) - 2.0 * c + self.abar(x - ex)) / (h * h);
        let dyy = (self.abar(x + ey) - 2.0 * c + self.abar(x - ey)) / (h * h);
        let dxy = (self.abar(x + ex + ey) - self.abar(x + ex - ey) - self.abar(x - ex + ey)
            + self.abar(x - ex - ey))
            / (4.0 * h * h);
        [dxx, dxy, dyy]
    }
    fn dd_b(&self, x: Vec2) -> [Mat2; 2] {
        let h = 1e-3 * (1.0 + x.norm());
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        let c = self.model.drift(x);
        let dxx = (self.model.drift(x + ex) - 2.0 * c + self.model.drift(x - ex)) / (h * h);
        let dyy = (self.model.drift(x + ey) - 2.0 * c + self.model.drift(x - ey)) / (h * h);
        let dxy = (self.model.drift(x + ex + ey) - self.model.drift(x + ex - ey)
            - self.model.drift(x - ex + ey)
            + self.model.drift(x - ex - ey))
            / (4.0 * h * h);
        [
            Mat2::new(dxx.x, dxy.x, dxy.x, dyy.x),
            Mat2::new(dxx.y, dxy.y, dxy.y, dyy.y),
        ]
    }

    /// Second-derivative blocks of the Hamiltonian
    /// `H(x, p) = p' A p / 2 + b . p` at `(x, p)`: `(Hxx, Hxp, Hpp)` with
    /// `(Hxp)_{kl} = d_{x_k} d_{p_l} H` and `Hpp = A`. These drive the
    /// variational (plane) transport of the Hessian of `U` along
    /// characteristics: `W' = -(Hxx + Hxp W + W Hxp' + W Hpp W)`.
    fn hamiltonian_blocks(&self, x: Vec2, p: Vec2) -> (Mat2, Mat2, Mat2) {
        let abar = self.abar(x);
        let j = self.model.jacobian(x);
        let da = self.d_abar(x);
        let hxp = Mat2::new(
            (da[0] * p).x + j[(0, 0)],
            (da[0] * p).y + j[(1, 0)],
            (da[1] * p).x + j[(0, 1)],
            (da[1] * p).y + j[(1, 1)],
        );
        let dda = self.dd_abar(x);
        let ddb = self.dd_b(x);
        let hxx = Mat2::new(
            0.5 * (dda[0] * p).dot(&p) + ddb[0][(0, 0)] * p.x + ddb[1][(0, 0)] * p.y,
            0.5 * (dda[1] * p).dot(&p) + ddb[0][(0, 1)] * p.x + ddb[1][(0, 1)] * p.y,
            0.5 * (dda[1] * p).dot(&p) + ddb[0][(1, 0)] * p.x + ddb[1][(1, 0)] * p.y,
            0.5 * (dda[2] * p).dot(&p) + ddb[0][(1, 1)] * p.x + ddb[1][(1, 1)] * p.y,
        );
        (hxx, hxp, abar)
    }

    /// `F = div(b) + a . p + tr(A W)/2` with `a_i = sum_j d_j A_ij`.
    fn f_of(&self, x: Vec2, p: Vec2, w: &Mat2) -> f64 {
        let abar = self.abar(x);
        let j = self.model.jacobian(x);
        let da = self.d_abar(x);
        let a_vec = Vec2::new(da[0][(0, 0)] + da[1][(0, 1)], da[0][(1, 0)] + da[1][(1, 1)]);
        j.trace() + a_vec.dot(&p) + 0.5 * (abar * w).trace()
    }
}

/// A lightly smoothed polyline with arc-length lookup, used to take stable
/// tangents of solver-traced paths.
struct SmoothPath {
    verts: Vec<Vec2>,
    s: Vec<f64>,
}

impl SmoothPath {
    fn new(raw: &[Vec2], window: usize) -> Self {
        let n = raw.len();
        let mut verts = Vec::with_capacity(n);
        for k in 0..n {
            let lo = k.saturating_sub(window);
            let hi = (k + window).min(n - 1);
            let mut acc = Vec2::zeros();
            for v in &raw[lo..=hi] {
                acc += *v;
            }
            verts.push(acc / (hi - lo + 1) as f64);
        }
        let mut s = vec![0.0];
        for k in 1..n {
            s.push(s[k - 1] + (verts[k] - verts[k - 1]).norm());
        }
        Self { verts, s }
    }
    fn total(&self) -> f64 {
        *self.s.last().unwrap()
    }
    fn locate(&self, ss: f64) -> (usize, f64) {
        let n = self.verts.len();
        let mut k = match self.s.binary_search_by(|v| v.partial_cmp(&ss).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if k >= n - 1 {
            k = n - 2;
        }
        let span = self.s[k + 1] - self.s[k];
        let t = if span > 0.0 { ((ss - self.s[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
        (k, t)
    }
    fn at(&self, ss: f64) -> Vec2 {
        let (k, t) = self.locate(ss);
        self.verts[k] * (1.0 - t) + self.verts[k + 1] * t
    }
    /// Central-difference tangent over a +-`win` arc-length window.
    fn tangent(&self, ss: f64, win: f64) -> Option<Vec2> {
        let a = (ss - win).max(0.0);
        let b = (ss + win).min(self.total());
        let d = self.at(b) - self.at(a);
        let n = d.norm();
        (n > 0.0).then(|| d / n)
    }
}

/// The travel-time integral of `F` along `map` (oriented `x0 -> x*`), with
/// the Hessian of `U` transported by the Riccati equation: forward from
/// `h_eq` and, when `h_sad` is given, backward from it, joined where the two
/// transports agree best. Also returns the accumulated barrier
/// `int p' A p / (2 |v|) ds` as a consistency product.
pub fn transported_f_integral<M: Model + ?Sized>(
    model: &M,
    map: &Path,
    tangent_window: f64,
    h_eq: &Mat2,
    h_sad: Option<&Mat2>,
) -> Result<(f64, f64)> {
    if map.vertices.len() < 4 {
        return Err(Error::PathTracing("path too short for the F integral".into()));
    }
    let geo = Geometry { model };
    let path = SmoothPath::new(&map.vertices, 3);
    let total = path.total();
    if !(total > 0.0) {
        return Err(Error::PathTracing("degenerate path for the F integral".into()));
    }
    let nstep = 4000usize;
    let ds = total / nstep as f64;

    // States at half-step resolution: position, momentum, speed.
    let mut samples = Vec::with_capacity(2 * nstep + 1);
    let mut mu_max = 0.0f64;
    for i in 0..=2 * nstep {
        let ss = i as f64 * 0.5 * ds;
        let x = path.at(ss);
        let tau = path
            .tangent(ss, tangent_window)
            .ok_or_else(|| Error::PathTracing("degenerate path tangent".into()))?;
        let (p, mu) = momentum_on_path(model, x, tau)?;
        mu_max = mu_max.max(mu);
        samples.push((x, p, mu));
    }
    // Trim RK intervals whose speed underflows: there F -> 0 as well, so the
    // omitted contribution vanishes with the interval.
    let mu_floor = 1e-9 * mu_max;
    let interval_ok =
        |i: usize| (2 * i..=2 * i + 2).all(|k| samples[k].2 > mu_floor);
    let lo = (0..nstep).find(|&i| interval_ok(i)).ok_or_else(|| {
        Error::PathTracing("characteristic speed vanishes along the whole path".into())
    })?;
    let hi = (0..nstep).rev().find(|&i| interval_ok(i)).unwrap();
    if !(lo..=hi).all(interval_ok) {
        return Err(Error::PathTracing(
            "characteristic speed vanishes in the interior of the path".into(),
        ));
    }

    // Transport the Hessian as a Lagrangian plane: propagate the pair
    // (A, B) of variational blocks linearly along the characteristic,
    //   A' = (Hxp' A + Abar B) / mu,   B' = -(Hxx A + Hxp B) / mu,
    // and read off W = B A^{-1}. The plane propagation is linear and never
    // blows up; Riccati poles (conjugate points induced by path noise)
    // appear only as isolated near-zeros of det A, which are bridged when
    // the integrand is assembled. Renormalize (A, B) each step to keep the
    // common scale bounded.
    let scale = h_eq.norm() + h_sad.map(|h| h.norm()).unwrap_or(0.0);
    let cap = 5.0 * scale.max(1e-300);
    let nw = hi - lo + 2;
    let mut w_at: Vec<Option<Mat2>> = vec![None; nw];
    let mut a = Mat2::identity();
    let mut b = *h_eq;
    let read_w = |a: &Mat2, b: &Mat2| -> Option<Mat2> {
        let w = b * a.try_inverse()?;
        (w.norm().is_finite() && w.norm() <= cap).then(|| crate::model::symmetrize(&w))
    };
    w_at[0] = read_w(&a, &b);
    for i in lo..=hi {
        let (xa, pa, mua) = samples[2 * i];
        let (xm, pm, mum) = samples[2 * i + 1];
        let (xb, pb, mub) = samples[2 * i + 2];
        let rhs = |x: Vec2, p: Vec2, mu: f64, a: &Mat2, b: &Mat2| -> (Mat2, Mat2) {
            let (hxx, hxp, abar) = geo.hamiltonian_blocks(x, p);
            ((hxp.transpose() * a + abar * b) / mu, -(hxx * a + hxp * b) / mu)
        };
        let (ka1, kb1) = rhs(xa, pa, mua, &a, &b);
        let (ka2, kb2) = rhs(xm, pm, mum, &(a + 0.5 * ds * ka1), &(b + 0.5 * ds * kb1));
        let (ka3, kb3) = rhs(xm, pm, mum, &(a + 0.5 * ds * ka2), &(b + 0.5 * ds * kb2));
        let (ka4, kb4) = rhs(xb, pb, mub, &(a + ds * ka3), &(b + ds * kb3));
        a += ds / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
        b += ds / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
        // Re-orthonormalize the plane basis (W = B A^{-1} is invariant under
        // right-multiplying both blocks), keeping A well-conditioned.
        let stacked = nalgebra::Matrix4x2::<f64>::from_fn(|r, c| {
            if r < 2 {
                a[(r, c)]
            } else {
                b[(r - 2, c)]
            }
        });
        if !stacked.norm().is_finite() {
            return Err(Error::PathTracing(
                "Hessian plane transport did not stay finite".into(),
            ));
        }
        let q = stacked.qr().q();
        a = Mat2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]);
        b = Mat2::new(q[(2, 0)], q[(2, 1)], q[(3, 0)], q[(3, 1)]);
        w_at[i - lo + 1] = read_w(&a, &b);
    }

    // Assemble the integrand at nodes where the Hessian is readable; pole
    // runs are bridged linearly in arc length. When the path ends at a
    // saddle (a saddle Hessian was supplied), F vanishes there by the trace
    // identity, so an unreadable tail is bridged to zero at the endpoint.
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(nw);
    for (k, w) in w_at.iter().enumerate() {
        if let Some(w) = w {
            let (x, p, mu) = samples[2 * (lo + k)];
            nodes.push(((lo + k) as f64 * ds, geo.f_of(x, p, w) / mu));
        }
    }
    if nodes.len() < nw / 2 {
        return Err(Error::PathTracing(
            "Hessian transport produced too few readable values".into(),
        ));
    }
    if w_at[nw - 1].is_none() {
        if h_sad.is_some() {
            nodes.push(((hi + 1) as f64 * ds, 0.0));
        } else {
            return Err(Error::PathTracing(
                "Hessian transport left its validity range and no saddle Hessian was given"
                    .into(),
            ));
        }
    }
    let mut f_int = 0.0f64;
    for pair in nodes.windows(2) {
        f_int += 0.5 * (pair[1].0 - pair[0].0) * (pair[0].1 + pair[1].1);
    }

    let mut barrier = 0.0f64;
    for i in lo..=hi {
        let (xa, pa, mua) = samples[2 * i];
        let (xb, pb, mub) = samples[2 * i + 2];
        let dua = 0.5 * (geo.abar(xa) * pa).dot(&pa) / mua;
        let dub = 0.5 * (geo.abar(xb) * pb).dot(&pb) / mub;
        barrier += 0.5 * ds * (dua + dub);
    }
    if !f_int.is_finite() {
        return Err(Error::PathTracing("F integral did not stay finite".into()));
    }
    Ok((f_int, barrier))
}

/// Inputs of a transition-time estimate.
#[derive(Debug, Clone)]
pub struct RateRequest {
    pub epsilon: f64,
    /// The saddle `x*` on the basin boundary.
    pub saddle: Vec2,
    /// The attractor `x0` the quasi-potential was computed from.
    pub equilibrium: Vec2,
    /// Minimum action path from `x0` to `x*`.
    pub map: Path,
    /// Hessian stencil multiplier for the grid-difference fallbacks.
    pub hessian_stencil_mult: usize,
}

/// The estimate and its factors.
#[derive(Debug, Clone)]
pub struct RateEstimate {
    pub expected_time: f64,
    pub rate: f64,
    /// `U(x*)`, the quasi-potential barrier.
    pub barrier: f64,
    /// The unstable eigenvalue of the drift Jacobian at the saddle.
    pub lambda_plus: f64,
    pub det_hessian_equilibrium: f64,
    pub det_hessian_saddle: f64,
    /// `int F dt` along the MAP.
    pub f_integral: f64,
}

impl RateEstimate {
    /// Key=value lines for reports.
    pub fn to_record(&self) -> String {
        format!(
            "expected_time={}\nrate={}\nbarrier={}\nlambda_plus={}\n\
             det_hessian_equilibrium={}\ndet_hessian_saddle={}\nf_integral={}\n",
            self.expected_time,
            self.rate,
            self.barrier,
            self.lambda_plus,
            self.det_hessian_equilibrium,
            self.det_hessian_saddle,
            self.f_integral
        )
    }
}

/// Evaluate the sharp estimate on a computed field.
///
/// Endpoint Hessians come from the analytic matrix equations of the
/// linearized dynamics where those are solvable, and otherwise fall back to
/// grid second differences with the requested stencil multiplier.
pub fn transition_time<M: Model + ?Sized>(
    request: &RateRequest,
    u: &ScalarField,
    model: &M,
) -> Result<RateEstimate> {
    if request.epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {}",
            request.epsilon
        )));
    }
    let h = u.grid.h;
    let endpoints_ok = request
        .map
        .vertices
        .first()
        .zip(request.map.vertices.last())
        .map(|(&a, &b)| {
            (a - request.equilibrium).norm() <= 2.0 * h && (b - request.saddle).norm() <= 2.0 * h
        })
        .unwrap_or(false);
    if !endpoints_ok {
        return Err(Error::PathTracing(
            "MAP endpoints do not match the equilibrium and saddle".into(),
        ));
    }

    let jac = model.jacobian(request.saddle);
    let lambda_plus = crate::math::real_eigenvalues(&jac)
        .map(|(a, b)| a.max(b))
        .filter(|&l| l > 0.0)
        .ok_or(Error::NotASaddle { at: request.saddle })?;

    let m = request.hessian_stencil_mult;
    let h_eq = equilibrium_hessian(model, request.equilibrium)
        .or_else(|_| hessian_of_u(u, request.equilibrium, m))?;
    let det_eq = h_eq.determinant();
    if det_eq <= 0.0 {
        return Err(Error::DegenerateHessian { det: det_eq });
    }
    let h_sad = saddle_hessian(model, request.saddle)
        .or_else(|_| hessian_of_u(u, request.saddle, m))?;
    let det_sad = h_sad.determinant();

    let barrier = u
        .interpolate(request.saddle)
        .ok_or(Error::OutsideComputedRegion { at: request.saddle })?;

    let (f_int, _transported_barrier) =
        transported_f_integral(model, &request.map, 4.0 * h, &h_eq, Some(&h_sad))?;

    let expected_time = (2.0 * std::f64::consts::PI / lambda_plus)
        * (det_sad.abs() / det_eq).sqrt()
        * f_int.exp()
        * (barrier / request.epsilon).exp();
    Ok(RateEstimate {
        expected_time,
        rate: 1.0 / expected_time,
        barrier,
        lambda_plus,
        det_hessian_equilibrium: det_eq,
        det_hessian_saddle: det_sad,
        f_integral: f_int,
    })
}
