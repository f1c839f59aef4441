//! Hybrid secant/bisection scalar root finding.

use crate::error::{Error, Result};

/// Outcome of a bracketed root solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootStatus {
    /// Bracket width or residual tolerance reached.
    Converged,
    /// Iteration budget exhausted; the value is the best bracket midpoint.
    MaxIterations,
}

/// Solve `f(s) = 0` on a bracket `[a, b]` with `f(a) * f(b) < 0` by the
/// hybrid secant/bisection method: a secant step is accepted only when it
/// lands strictly inside the current bracket, otherwise the step bisects.
///
/// Returns the root together with a convergence status. `tol` bounds the
/// bracket width, `tol_f` the residual.
pub fn hybrid_secant_bisection<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    tol_f: f64,
    max_iter: usize,
) -> Result<(f64, RootStatus)> {
    let (mut lo, mut hi) = (a, b);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok((lo, RootStatus::Converged));
    }
    if fhi == 0.0 {
        return Ok((hi, RootStatus::Converged));
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::InvalidBracket { a, b });
    }

    // Last two iterates for the secant step.
    let (mut x_prev, mut f_prev) = (lo, flo);
    let (mut x_cur, mut f_cur) = (hi, fhi);

    for _ in 0..max_iter {
        let secant_ok = f_cur != f_prev;
        let mut x_next = if secant_ok {
            x_cur - f_cur * (x_cur - x_prev) / (f_cur - f_prev)
        } else {
            f64::NAN
        };
        if !(x_next > lo.min(hi) && x_next < lo.max(hi)) {
            x_next = 0.5 * (lo + hi);
        }
        let f_next = f(x_next);
        (x_prev, f_prev) = (x_cur, f_cur);
        (x_cur, f_cur) = (x_next, f_next);

        if f_next == 0.0 || f_next.abs() <= tol_f {
            return Ok((x_next, RootStatus::Converged));
        }
        if f_next.signum() == flo.signum() {
            (lo, flo) = (x_next, f_next);
        } else {
            (hi, fhi) = (x_next, f_next);
        }
        let _ = fhi;
        if (hi - lo).abs() <= tol {
            return Ok((0.5 * (lo + hi), RootStatus::Converged));
        }
    }
    Ok((0.5 * (lo + hi), RootStatus::MaxIterations))
}
