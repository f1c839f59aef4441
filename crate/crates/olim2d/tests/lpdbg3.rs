use olim2d::grid::Domain;
use olim2d::math::{real_eigenvalues, Mat2, Vec2};
use olim2d::models::{DiffusionKind, LambdaPhageModel, SADDLE_SEED};
use olim2d::postproc::{default_map_steps, gradient_field, trace_map, MapStatus};
use olim2d::rates::find_saddle;
use olim2d::solver::{linear_quasipotential_matrix, solve, BoundaryPolicy, SolverConfig};
use olim2d::Model;

struct Geo<'a> {
    model: &'a LambdaPhageModel,
}

impl Geo<'_> {
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
    fn p_mu(&self, x: Vec2, tau: Vec2) -> (Vec2, f64) {
        let abar = self.abar(x);
        let ainv = abar.try_inverse().unwrap();
        let b = self.model.drift(x);
        let mu = (((ainv * b).dot(&b)) / ((ainv * tau).dot(&tau))).sqrt();
        (ainv * (mu * tau - b), mu)
    }
    fn w_dot(&self, x: Vec2, p: Vec2, w: &Mat2) -> Mat2 {
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
        -(hxx + hxp * w + w * hxp.transpose() + w * abar * w)
    }
    fn f_of(&self, x: Vec2, p: Vec2, w: &Mat2) -> f64 {
        let abar = self.abar(x);
        let j = self.model.jacobian(x);
        let da = self.d_abar(x);
        let a_vec = Vec2::new(da[0][(0, 0)] + da[1][(0, 1)], da[0][(1, 0)] + da[1][(1, 1)]);
        j.trace() + a_vec.dot(&p) + 0.5 * (abar * w).trace()
    }
}

/// Smoothed polyline with arc-length lookup.
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
        let t = ((ss - self.s[k]) / (self.s[k + 1] - self.s[k])).clamp(0.0, 1.0);
        (k, t)
    }
    fn at(&self, ss: f64) -> Vec2 {
        let (k, t) = self.locate(ss);
        self.verts[k] * (1.0 - t) + self.verts[k + 1] * t
    }
    /// Central-difference tangent over a +-window arc length.
    fn tangent(&self, ss: f64, win: f64) -> Vec2 {
        let a = (ss - win).max(0.0);
        let b = (ss + win).min(self.total());
        let d = self.at(b) - self.at(a);
        d / d.norm()
    }
}


/// The det<0 symmetric solution of M' = 2M with M abar M + (J'M + MJ)/2 = 0.
fn riccati_saddle(j: &Mat2, abar: &Mat2) -> Option<Mat2> {
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
    let scale = j.norm() / abar.norm();
    for _ in 0..400 {
        let mut v = [rand() * scale, rand() * scale, rand() * scale];
        let mut ok = false;
        for _ in 0..200 {
            let f = res3(&v);
            if (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt() < 1e-13 * scale * j.norm() {
                ok = true;
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
                Some(d) => { v[0] += d[0]; v[1] += d[1]; v[2] += d[2]; }
                None => break,
            }
        }
        if ok {
            let h = 2.0 * Mat2::new(v[0], v[1], v[1], v[2]);
            if h.determinant() < -1e-10 * scale * scale {
                return Some(h);
            }
        }
    }
    None
}

#[test]
fn dbg_path_transport2() {
    let n: usize = std::env::var("LP_N").ok().and_then(|s| s.parse().ok()).unwrap_or(1024);
    let k: usize = std::env::var("LP_K").ok().and_then(|s| s.parse().ok()).unwrap_or(22);
    for (kind, target) in [
        (DiffusionKind::Identity, 3.76072e-6_f64),
        (DiffusionKind::Diagonal, 4.29250e-6_f64),
    ] {
        let model = LambdaPhageModel::new(kind).unwrap();
        let geo = Geo { model: &model };
        let cache = std::path::PathBuf::from(format!("/tmp/lp_u_{kind:?}_{n}_{k}.qpf"));
        let u = if cache.exists() {
            match olim2d::io::read_field_from(&cache).unwrap() {
                olim2d::io::FieldData::Scalar(f) => f,
                _ => unreachable!(),
            }
        } else {
            let config = SolverConfig::square(n, k,
                Domain::new(0.0, 250.0, 0.0, 250.0).unwrap(), BoundaryPolicy::ComputeWholeDomain);
            let res = solve(&model, &config).unwrap();
            let f = res.u_field();  // grid matches u below
            olim2d::io::write_field_atomic(&cache, &olim2d::io::FieldData::Scalar(f.clone())).unwrap();
            f
        };
        let x0 = match model.attractor() {
            olim2d::AttractorSpec::StablePoint(p) => *p,
            _ => unreachable!(),
        };
        let saddle = find_saddle(&model, SADDLE_SEED).unwrap();
        let grad = gradient_field(&u);
        let dir = (x0 - saddle) / (x0 - saddle).norm();
        let gh = u.grid.h;
        let start = saddle + 2.0 * gh * dir;
        let trace = trace_map(&model, &grad, x0, start, gh / 2.0,
                              default_map_steps(n, n)).unwrap();
        assert_eq!(trace.status, MapStatus::ReachedAttractor);
        let map = trace.path.reversed(); // x0 -> saddle
        let path = SmoothPath::new(&map.vertices, 3);
        let total = path.total();
        let twin = 4.0 * gh;

        let h0 = 2.0 * linear_quasipotential_matrix(&model.jacobian(x0), &model.sigma(x0))
            .unwrap()
            .m;
        let state = |ss: f64| -> (Vec2, Vec2, f64) {
            let x = path.at(ss);
            let tau = path.tangent(ss, twin);
            let (p, mu) = geo.p_mu(x, tau);
            (x, p, mu)
        };
        // Saddle Riccati branch for the backward seed.
        let js_m = model.jacobian(saddle);
        let abar_sad = geo.abar(saddle);
        let hstar = riccati_saddle(&js_m, &abar_sad).expect("saddle Riccati branch");

        let nstep = 4000usize;
        let ds = total / nstep as f64;
        // Sample states at the 2*nstep+1 half-step points.
        let samples: Vec<(Vec2, Vec2, f64)> =
            (0..=2 * nstep).map(|i| state(i as f64 * 0.5 * ds)).collect();
        // Forward transport from H0.
        let mut wf = vec![h0; nstep + 1];
        for i in 0..nstep {
            let (xa, pa, mua) = samples[2 * i];
            let (xm, pm, mum) = samples[2 * i + 1];
            let (xb, pb, mub) = samples[2 * i + 2];
            let w = wf[i];
            let k1 = geo.w_dot(xa, pa, &w) / mua;
            let k2 = geo.w_dot(xm, pm, &(w + 0.5 * ds * k1)) / mum;
            let k3 = geo.w_dot(xm, pm, &(w + 0.5 * ds * k2)) / mum;
            let k4 = geo.w_dot(xb, pb, &(w + ds * k3)) / mub;
            wf[i + 1] = w + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        // Backward transport from Hstar.
        let mut wb_arr = vec![hstar; nstep + 1];
        for i in (0..nstep).rev() {
            let (xa, pa, mua) = samples[2 * i + 2];
            let (xm, pm, mum) = samples[2 * i + 1];
            let (xb, pb, mub) = samples[2 * i];
            let w = wb_arr[i + 1];
            let k1 = -geo.w_dot(xa, pa, &w) / mua;
            let k2 = -geo.w_dot(xm, pm, &(w + 0.5 * ds * k1)) / mum;
            let k3 = -geo.w_dot(xm, pm, &(w + 0.5 * ds * k2)) / mum;
            let k4 = -geo.w_dot(xb, pb, &(w + ds * k3)) / mub;
            wb_arr[i] = w + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        // Match where the two agree best.
        let mut best_i = 0;
        let mut best_m = f64::INFINITY;
        for i in 0..=nstep {
            let mm = (wf[i] - wb_arr[i]).norm() / (wf[i].norm() + wb_arr[i].norm());
            if mm < best_m {
                best_m = mm;
                best_i = i;
            }
        }
        eprintln!("  match at s={:.2}/{:.2} rel-mismatch {:.3e}", best_i as f64 * ds, total, best_m);
        let wat = |i: usize| if i <= best_i { wf[i] } else { wb_arr[i] };
        let mut sf = 0.0_f64;
        let mut barrier = 0.0_f64;
        for i in 0..nstep {
            let (xa, pa, mua) = samples[2 * i];
            let (xb, pb, mub) = samples[2 * i + 2];
            let fa = geo.f_of(xa, pa, &wat(i)) / mua;
            let fb = geo.f_of(xb, pb, &wat(i + 1)) / mub;
            sf += 0.5 * ds * (fa + fb);
            let dua = 0.5 * (geo.abar(xa) * pa).dot(&pa) / mua;
            let dub = 0.5 * (geo.abar(xb) * pb).dot(&pb) / mub;
            barrier += 0.5 * ds * (dua + dub);
        }
        let w = wat(nstep);
        let js = model.jacobian(saddle);
        let lam_plus = real_eigenvalues(&js).map(|(a, b)| a.max(b)).unwrap();
        let hs_fd = olim2d::rates::hessian_of_u(&u, saddle, 4).unwrap();
        let t = (2.0 * std::f64::consts::PI / lam_plus)
            * (hs_fd.determinant().abs() / h0.determinant()).sqrt()
            * sf.exp()
            * barrier.exp();
        eprintln!(
            "{kind:?}: N={n} L={total:.2} intFdt={sf:.5} barrier={barrier:.5} (grid {:.5}) detW_end={:.4e} detHs_fd={:.4e} rate={:.6e} target={target:.6e} ratio={:.4}",
            u.interpolate(saddle).unwrap(),
            w.determinant(),
            hs_fd.determinant(),
            1.0 / t,
            (1.0 / t) / target
        );
    }
}
