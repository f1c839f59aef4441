//! Small linear-algebra aliases and helpers shared across the crate.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// 2x2 rotation matrix by angle `alpha` (radians).
pub fn rotation(alpha: f64) -> Mat2 {
    let (s, c) = alpha.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Eigenvalues of a real 2x2 matrix; `None` when complex.
pub fn real_eigenvalues(m: &Mat2) -> Option<(f64, f64)> {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((tr - s) / 2.0, (tr + s) / 2.0))
}

/// Real parts of the eigenvalues of a real 2x2 matrix.
pub fn eigenvalue_real_parts(m: &Mat2) -> (f64, f64) {
    match real_eigenvalues(m) {
        Some(pair) => pair,
        None => {
            let re = m.trace() / 2.0;
            (re, re)
        }
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix: `(eigenvalues, eigenvectors)`
/// with unit eigenvector columns, eigenvalues ascending.
pub fn symmetric_eigen(m: &Mat2) -> ((f64, f64), (Vec2, Vec2)) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let d = m[(1, 1)];
    let tr = a + d;
    let gap = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
    let l0 = 0.5 * (tr - gap);
    let l1 = 0.5 * (tr + gap);
    let v1 = if b.abs() > 1e-300 {
        Vec2::new(l1 - d, b).normalize()
    } else if a >= d {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    };
    let v0 = Vec2::new(-v1.y, v1.x);
    ((l0, l1), (v0, v1))
}
