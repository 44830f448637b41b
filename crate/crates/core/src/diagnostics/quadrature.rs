//! Adaptive Simpson quadrature, on finite intervals and on the real line
//! through the substitution `x = tan v`.

use crate::scalar::Scalar;

use super::DiagnosticsError;

/// Refinement depth at which a subinterval is declared non-convergent.
pub const MAX_DEPTH: u32 = 50;

/// Smallest accepted absolute tolerance.
pub const MIN_TOL: f64 = 1e-12;

struct Panel<T> {
    a: T,
    fa: T,
    m: T,
    fm: T,
    b: T,
    fb: T,
    whole: T,
}

fn simpson<T: Scalar>(a: T, fa: T, fm: T, b: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

fn panel<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, fa: T, b: T, fb: T) -> Panel<T> {
    let m = (a + b) / T::lit(2.0);
    let fm = f(m);
    Panel {
        a,
        fa,
        m,
        fm,
        b,
        fb,
        whole: simpson(a, fa, fm, b, fb),
    }
}

fn refine<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    p: &Panel<T>,
    tol: T,
    depth: u32,
) -> Result<T, DiagnosticsError> {
    let left = panel(f, p.a, p.fa, p.m, p.fm);
    let right = panel(f, p.m, p.fm, p.b, p.fb);
    let diff = left.whole + right.whole - p.whole;
    if diff.abs() <= T::lit(15.0) * tol {
        return Ok(left.whole + right.whole + diff / T::lit(15.0));
    }
    if depth >= MAX_DEPTH || !diff.is_finite() {
        return Err(DiagnosticsError::MaxDepth {
            depth,
            at: p.m.as_f64(),
        });
    }
    let half = tol / T::lit(2.0);
    Ok(refine(f, &left, half, depth + 1)? + refine(f, &right, half, depth + 1)?)
}

/// `∫_a^b f` with absolute error target `tol`.
pub fn integrate<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<T, DiagnosticsError> {
    if tol.as_f64() < MIN_TOL {
        return Err(DiagnosticsError::InvalidInput(format!(
            "quadrature tolerance {tol} below {MIN_TOL:e}"
        )));
    }
    let p = panel(&f, a, f(a), b, f(b));
    refine(&f, &p, tol, 0)
}

/// `∫_ℝ f` via `x = tan v`, integrating `f(tan v)·sec²v` over `[−π/2, π/2]`.
///
/// Non-finite values of the transformed integrand at the endpoints are
/// replaced by zero.
pub fn quadrature<T: Scalar>(f: impl Fn(T) -> T, tol: T) -> Result<T, DiagnosticsError> {
    let half_pi = T::lit(std::f64::consts::FRAC_PI_2);
    let g = |v: T| {
        let x = v.tan();
        let val = f(x) * (T::one() + x * x);
        if val.is_finite() {
            val
        } else {
            T::zero()
        }
    };
    integrate(g, -half_pi, half_pi, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{cauchy_density, cauchy_psi};
    use std::f64::consts::PI;

    #[test]
    fn polynomial_and_trig() {
        let q = integrate(|x: f64| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert!((q - 1.0 / 3.0).abs() < 1e-12);
        let q = integrate(f64::sin, 0.0, 5.0 * PI, 1e-10).unwrap();
        assert!((q - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cauchy_density_normalizes() {
        let q = quadrature(|x: f64| cauchy_density(0.0, x), 1e-12).unwrap();
        assert!((q - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_over_real_line() {
        let q = quadrature(|x: f64| (-x * x / 2.0).exp(), 1e-11).unwrap();
        assert!((q - (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn cauchy_drift_at_one() {
        let q = quadrature(|x: f64| cauchy_psi(1.0, x) * cauchy_density(0.0, x), 1e-11).unwrap();
        assert!((q + 0.4).abs() < 1e-6);
    }

    #[test]
    fn cauchy_information() {
        let q = quadrature(
            |x: f64| cauchy_psi(0.0, x).powi(2) * cauchy_density(0.0, x),
            1e-11,
        )
        .unwrap();
        assert!((q - 0.5).abs() < 1e-6);
    }

    #[test]
    fn single_precision() {
        let q = integrate(|x: f32| x * x, 0.0, 1.0, 1e-6).unwrap();
        assert!((q - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn non_integrable_hits_max_depth() {
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, DiagnosticsError::MaxDepth { .. }));
    }

    #[test]
    fn tolerance_floor() {
        assert!(matches!(
            integrate(|x: f64| x, 0.0, 1.0, 1e-13),
            Err(DiagnosticsError::InvalidInput(_))
        ));
    }
}
