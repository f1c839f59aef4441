// Scratch: characteristic shooting from the attractor for int F dt.
use nalgebra::Matrix4x2;
use olim2d::math::{Mat2, Vec2};
use olim2d::models::{DiffusionKind, LambdaPhageModel, PolarModel, SADDLE_SEED};
use olim2d::rates::{equilibrium_hessian, find_saddle, saddle_hessian};
use olim2d::{AttractorSpec, Model};

struct Geo<'a, M: Model> {
    model: &'a M,
}

impl<M: Model> Geo<'_, M> {
    fn abar(&self, x: Vec2) -> Mat2 {
        let s = self.model.sigma(x);
        s * s.transpose()
    }
    fn d_abar(&self, x: Vec2) -> [Mat2; 2] {
        let h = 1e-4 * (1.0 + x.norm());
        let dx = (self.abar(x + Vec2::new(h, 0.0)) - self.abar(x - Vec2::new(h, 0.0))) / (2.0 * h);
        let dy = (self.abar(x + Vec2::new(0.0, h)) - self.abar(x - Vec2::new(0.0, h))) / (2.0 * h);
        [dx, dy]
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
    /// (xdot, pdot, abdot, F/|v|, dU/ds) in arc-length parametrization.
    fn rhs(&self, x: Vec2, p: Vec2, ab: &Matrix4x2<f64>) -> (Vec2, Vec2, Matrix4x2<f64>, f64, f64) {
        if !(x.norm().is_finite() && p.norm().is_finite()) || x.norm() < 5e-3 {
            return (Vec2::zeros(), Vec2::zeros(), Matrix4x2::zeros(), 0.0, 0.0);
        }
        let abar = self.abar(x);
        let j = self.model.jacobian(x);
        let v = self.model.drift(x) + abar * p;
        let speed = v.norm();
        if !(speed > 1e-14) {
            return (Vec2::zeros(), Vec2::zeros(), Matrix4x2::zeros(), 0.0, 0.0);
        }
        let da = self.d_abar(x);
        let jt_p = j.transpose() * p;
        let pdot = Vec2::new(
            -(0.5 * (da[0] * p).dot(&p) + jt_p.x),
            -(0.5 * (da[1] * p).dot(&p) + jt_p.y),
        );
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
        let a = Mat2::new(ab[(0, 0)], ab[(0, 1)], ab[(1, 0)], ab[(1, 1)]);
        let b = Mat2::new(ab[(2, 0)], ab[(2, 1)], ab[(3, 0)], ab[(3, 1)]);
        let adot = (hxp.transpose() * a + abar * b) / speed;
        let bdot = -(hxx * a + hxp * b) / speed;
        let mut abdot = Matrix4x2::zeros();
        abdot.fixed_view_mut::<2, 2>(0, 0).copy_from(&adot);
        abdot.fixed_view_mut::<2, 2>(2, 0).copy_from(&bdot);
        let a_vec = Vec2::new(da[0][(0, 0)] + da[1][(0, 1)], da[0][(1, 0)] + da[1][(1, 1)]);
        let w = if let Some(ai) = a.try_inverse() { b * ai } else { Mat2::zeros() };
        let f = j.trace() + a_vec.dot(&p) + 0.5 * (abar * w).trace();
        let du = 0.5 * (abar * p).dot(&p);
        (v / speed, pdot, abdot, f / speed, du / speed)
    }
}

struct ShootOut {
    miss: f64,
    int_f: f64,
    barrier: f64,
    arc: f64,
    end: Vec2,
}

fn shoot<M: Model>(
    model: &M,
    x0: Vec2,
    h0: &Mat2,
    xs: Vec2,
    theta: f64,
    delta: f64,
    ds: f64,
) -> ShootOut {
    let geo = Geo { model };
    let dir = Vec2::new(theta.cos(), theta.sin());
    let mut x = x0 + delta * dir;
    let mut p = h0 * (x - x0);
    let mut ab = Matrix4x2::<f64>::zeros();
    ab.fixed_view_mut::<2, 2>(0, 0).copy_from(&Mat2::identity());
    ab.fixed_view_mut::<2, 2>(2, 0).copy_from(h0);
    let mut int_f = 0.5 * delta * 0.0; // F ~ 0 at the attractor
    let mut barrier = 0.5 * (h0 * (x - x0)).dot(&(x - x0));
    let mut arc = delta;
    let mut best = ShootOut { miss: (x - xs).norm(), int_f, barrier, arc, end: x };
    let max_arc = 100.0 * (x0 - xs).norm();
    loop {
        let v = model.drift(x) + geo.abar(x) * p;
        if v.norm() < 1e-10 {
            break;
        }
        let k1 = geo.rhs(x, p, &ab);
        let k2 = geo.rhs(x + 0.5 * ds * k1.0, p + 0.5 * ds * k1.1, &(ab + 0.5 * ds * k1.2));
        let k3 = geo.rhs(x + 0.5 * ds * k2.0, p + 0.5 * ds * k2.1, &(ab + 0.5 * ds * k2.2));
        let k4 = geo.rhs(x + ds * k3.0, p + ds * k3.1, &(ab + ds * k3.2));
        x += ds / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p += ds / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        ab += ds / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        int_f += ds / 6.0 * (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3);
        barrier += ds / 6.0 * (k1.4 + 2.0 * k2.4 + 2.0 * k3.4 + k4.4);
        arc += ds;
        // re-orthonormalize the plane basis
        let q = ab.qr().q();
        ab = q;
        if !(x.norm().is_finite() && p.norm().is_finite()) || x.norm() < 1e-2 {
            break;
        }
        let d = (x - xs).norm();
        if d < best.miss {
            best = ShootOut { miss: d, int_f, barrier, arc, end: x };
        }
        if !d.is_finite() || arc > max_arc || d > 4.0 * best.miss + 1e-9 {
            break;
        }
    }
    best
}

fn run_case<M: Model>(model: &M, x0: Vec2, saddle: Vec2, label: &str, lam_plus: f64, target: Option<f64>) {
    let h0 = equilibrium_hessian(model, x0).unwrap();
    let hs = saddle_hessian(model, saddle).unwrap();
    let scale = (x0 - saddle).norm();
    let delta = 1e-3 * scale;
    let ds = 1e-3 * scale;
    // coarse scan over all launch angles, then golden-section refine
    let mut theta0 = 0.0;
    let mut best_miss = f64::INFINITY;
    for k in 0..72 {
        let t = k as f64 / 72.0 * 2.0 * std::f64::consts::PI;
        let o = shoot(model, x0, &h0.into(), saddle, t, delta, ds);
        eprintln!("  scan theta={t:.3} miss={:.3e} arc={:.2} end=({:.2},{:.2})", o.miss, o.arc, o.end.x, o.end.y);
        if o.miss < best_miss {
            best_miss = o.miss;
            theta0 = t;
        }
    }
    let mut lo = theta0 - 0.1;
    let mut hi = theta0 + 0.1;
    let gr = 0.5 * (5.0f64.sqrt() - 1.0);
    for _ in 0..48 {
        let t1 = hi - gr * (hi - lo);
        let t2 = lo + gr * (hi - lo);
        let m1 = shoot(model, x0, &h0.into(), saddle, t1, delta, ds).miss;
        let m2 = shoot(model, x0, &h0.into(), saddle, t2, delta, ds).miss;
        if m1 < m2 {
            hi = t2;
        } else {
            lo = t1;
        }
    }
    let theta = 0.5 * (lo + hi);
    let out = shoot(model, x0, &h0.into(), saddle, theta, delta, ds);
    // endpoint patches: barrier to the saddle via saddle quadratic, F -> 0
    let r = saddle - out.end;
    let barrier_full = out.barrier + 0.5 * (hs * r).dot(&r).abs();
    let t = (2.0 * std::f64::consts::PI / lam_plus)
        * (hs.determinant().abs() / h0.determinant()).sqrt()
        * out.int_f.exp()
        * barrier_full.exp(); // eps = 1 here; caller scales
    eprintln!(
        "{label}: theta={theta:.6} miss={:.3e} arc={:.3} intF={:.5} barrier={:.5} (+patch {:.2e}) rate={:.6e}{}",
        out.miss,
        out.arc,
        out.int_f,
        barrier_full,
        0.5 * (hs * r).dot(&r).abs(),
        1.0 / t,
        target.map(|tg| format!(" ratio={:.4}", (1.0 / t) / tg)).unwrap_or_default()
    );
}

#[test]
fn dbg_shoot_polar() {
    let model = PolarModel::new();
    let x0 = match model.attractor() {
        AttractorSpec::StablePoint(p) => *p,
        _ => unreachable!(),
    };
    let saddle = find_saddle(&model, Vec2::new(-2.8, 0.3)).unwrap();
    eprintln!("polar x0={:?} saddle=({:.4},{:.4})", x0, saddle.x, saddle.y);
    let lam = olim2d::math::real_eigenvalues(&model.jacobian(saddle))
        .map(|(a, b)| a.max(b))
        .unwrap();
    run_case(&model, x0, saddle, "polar", lam, None);
}

#[test]
fn dbg_shoot_lp() {
    for (kind, target) in [
        (DiffusionKind::Identity, 3.76072e-6_f64),
        (DiffusionKind::Diagonal, 4.29250e-6_f64),
    ] {
        let model = LambdaPhageModel::new(kind).unwrap();
        let x0 = match model.attractor() {
            AttractorSpec::StablePoint(p) => *p,
            _ => unreachable!(),
        };
        let saddle = find_saddle(&model, SADDLE_SEED).unwrap();
        let lam = olim2d::math::real_eigenvalues(&model.jacobian(saddle))
            .map(|(a, b)| a.max(b))
            .unwrap();
        run_case(&model, x0, saddle, &format!("{kind:?}"), lam, Some(target));
    }
}
