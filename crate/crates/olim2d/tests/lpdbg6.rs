// Grid finite-difference Hessians of the solved field at the equilibrium and
// saddle for several stencil widths, and the resulting rate variants.
use olim2d::grid::Domain;
use olim2d::io;
use olim2d::math::{real_eigenvalues, Vec2};
use olim2d::models::{DiffusionKind, LambdaPhageModel, SADDLE_SEED};
use olim2d::rates::find_saddle;
use olim2d::Model;

fn bilinear(u: &olim2d::field::ScalarField, x: Vec2) -> f64 {
    u.interpolate(x).unwrap()
}

#[test]
fn dbg_grid_hessians() {
    for (kind, target) in [
        (DiffusionKind::Identity, 3.76072e-6_f64),
        (DiffusionKind::Diagonal, 4.29250e-6_f64),
    ] {
        let n = 1024usize;
        let path = format!("/tmp/lp_u_{kind:?}_{n}_22.qpf");
        let data = io::read_field_from(std::path::Path::new(&path)).unwrap();
        let u = match data {
            io::FieldData::Scalar(s) => s,
            _ => unreachable!(),
        };
        let model = LambdaPhageModel::new(kind).unwrap();
        let x0 = match model.attractor() {
            olim2d::AttractorSpec::StablePoint(p) => *p,
            _ => unreachable!(),
        };
        let saddle = find_saddle(&model, SADDLE_SEED).unwrap();
        let js = model.jacobian(saddle);
        let lam_plus = real_eigenvalues(&js).map(|(a, b)| a.max(b)).unwrap();
        let barrier = bilinear(&u, saddle) - bilinear(&u, x0);
        eprintln!("--- {kind:?} barrier={barrier:.5} lam+={lam_plus:.5e}");
        let h = u.grid.h1;
        for mult in [1.0f64, 2.0, 4.0, 8.0, 12.0, 16.0] {
            let d = mult * h;
            let hess = |c: Vec2| {
                let ex = Vec2::new(d, 0.0);
                let ey = Vec2::new(0.0, d);
                let uxx =
                    (bilinear(&u, c + ex) - 2.0 * bilinear(&u, c) + bilinear(&u, c - ex)) / (d * d);
                let uyy =
                    (bilinear(&u, c + ey) - 2.0 * bilinear(&u, c) + bilinear(&u, c - ey)) / (d * d);
                let uxy = (bilinear(&u, c + ex + ey) - bilinear(&u, c + ex - ey)
                    - bilinear(&u, c - ex + ey)
                    + bilinear(&u, c - ex - ey))
                    / (4.0 * d * d);
                (uxx * uyy - uxy * uxy, uxx, uyy, uxy)
            };
            let (det0, a0, b0, c0) = hess(x0);
            let (dets, as_, bs, cs) = hess(saddle);
            let pref = (2.0 * std::f64::consts::PI / lam_plus) * (dets.abs() / det0).sqrt();
            let t0 = pref * barrier.exp(); // with int F = 0
            eprintln!(
                "  m={mult:>4}: detH0={det0:+.4e} (uxx={a0:+.3e} uyy={b0:+.3e} uxy={c0:+.3e})  detH*={dets:+.4e} (uxx={as_:+.3e} uyy={bs:+.3e} uxy={cs:+.3e})  rate(F=0)={:.4e} ratio={:.3}",
                1.0 / t0,
                (1.0 / t0) / target
            );
        }
        let dom: &Domain = &u.grid.domain;
        let _ = dom;
    }
}
