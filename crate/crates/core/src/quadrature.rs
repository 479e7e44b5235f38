//! Adaptive Simpson quadrature for smooth one-dimensional integrands.

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_DEPTH: u32 = 40;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, refining at most
/// `max_depth` levels below the whole interval.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut failed = false;
    let value = refine(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut failed);
    if failed || !value.is_finite() {
        return Err(Error::Quadrature {
            lower: a,
            upper: b,
            depth: max_depth,
        });
    }
    Ok(value)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    failed: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *failed = true;
        return left + right;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12, 40).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let v = adaptive_simpson(|x| x * x, 0.0, 1.0, 1e-12, 40).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_transcendental() {
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-10, 40).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let v = adaptive_simpson(|x| (-x * x).exp(), -6.0, 6.0, 1e-10, 40).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        // a jump inside the interval cannot meet an absurd tolerance in 3 levels
        let step = |x: f64| if x < 0.3 { 0.0 } else { 1.0 };
        let err = adaptive_simpson(step, 0.0, 1.0, 1e-15, 3).unwrap_err();
        assert!(matches!(err, Error::Quadrature { depth: 3, .. }));
    }
}
