//! Local drift and variance conditions for i.i.d. schemes, and the
//! linearization `R(u) = γ⁻¹(θ + u) b(θ, u) ≈ B u` near the root.

use serde::Serialize;

use crate::linalg::{ParamVec, SquareMatrix};
use crate::models::IidScheme;

use super::quadrature::quadrature;
use super::report::{ConditionId, ConditionReport, PointCheck, Region};
use super::DiagnosticsError;

/// Relative slack allowed in `lhs ≤ rhs` comparisons.
const COMPARE_RTOL: f64 = 1e-12;

/// Absolute accuracy requested from quadrature fallbacks.
const FALLBACK_TOL: f64 = 1e-10;

/// Default bound on the normalized second moment in the (B2) check.
pub const DEFAULT_B2_THRESHOLD: f64 = 1e3;

/// Uniform grid of `n_points` perturbations on `[lo, hi]`.
///
/// A grid point that lands within rounding of `u = 0` is snapped to exactly
/// zero so that expressions with a removable singularity there take their
/// defined limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self, DiagnosticsError> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(DiagnosticsError::InvalidGrid(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n_points < 3 {
            return Err(DiagnosticsError::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        Ok(Self { lo, hi, n_points })
    }

    /// `[−u_max, u_max]`.
    pub fn symmetric(u_max: f64, n_points: usize) -> Result<Self, DiagnosticsError> {
        Self::new(-u_max, u_max, n_points)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|i| {
                let u = if i + 1 == self.n_points {
                    self.hi
                } else {
                    self.lo + i as f64 * h
                };
                if u.abs() < 1e-9 * h {
                    0.0
                } else {
                    u
                }
            })
            .collect()
    }

    fn region(&self) -> Region {
        Region::u(self.lo, self.hi)
    }
}

/// Errors unless `c` is exactly symmetric with all principal minors
/// non-negative (up to rounding).
pub fn check_psd(c: &SquareMatrix<f64>) -> Result<(), DiagnosticsError> {
    if !c.is_symmetric() {
        return Err(DiagnosticsError::InvalidInput("C must be symmetric".into()));
    }
    let scale = c.max_abs().max(f64::MIN_POSITIVE);
    for mask in 1u32..(1 << c.dim()) {
        let k = mask.count_ones() as i32;
        let minor = c.principal_submatrix(mask).determinant();
        if minor < -1e-12 * scale.powi(k) {
            return Err(DiagnosticsError::InvalidInput(format!(
                "C is not non-negative definite (principal minor {minor:e})"
            )));
        }
    }
    Ok(())
}

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + COMPARE_RTOL * lhs.abs().max(rhs.abs())
}

/// Unit direction along which a scalar grid is laid out in parameter space.
fn direction(dim: usize) -> ParamVec<f64> {
    ParamVec::from_slice(&vec![1.0 / (dim as f64).sqrt(); dim])
}

/// `b(θ, u)` from the closed form, or by quadrature against the density.
/// The flag is true when quadrature was used.
fn drift_at(
    scheme: &IidScheme<f64>,
    theta: &ParamVec<f64>,
    u: &ParamVec<f64>,
) -> Result<(ParamVec<f64>, bool), DiagnosticsError> {
    if let Some(b) = scheme.closed_drift(theta, u) {
        return Ok((b, false));
    }
    if !scheme.has_density() {
        return Err(DiagnosticsError::MissingDrift(name(scheme)));
    }
    let at = *theta + *u;
    let mut b = ParamVec::zeros(theta.dim());
    for i in 0..theta.dim() {
        b[i] = quadrature(
            |x| scheme.psi_at(&at, x)[i] * scheme.density(theta, x).unwrap_or(0.0),
            FALLBACK_TOL,
        )?;
    }
    Ok((b, true))
}

fn second_moment_at(
    scheme: &IidScheme<f64>,
    theta: &ParamVec<f64>,
    u: &ParamVec<f64>,
) -> Result<(SquareMatrix<f64>, bool), DiagnosticsError> {
    if let Some(m) = scheme.closed_second_moment(theta, u) {
        return Ok((m, false));
    }
    if !scheme.has_density() {
        return Err(DiagnosticsError::MissingSecondMoment(name(scheme)));
    }
    let at = *theta + *u;
    let dim = theta.dim();
    let mut m = SquareMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..=i {
            let v = quadrature(
                |x| {
                    let p = scheme.psi_at(&at, x);
                    p[i] * p[j] * scheme.density(theta, x).unwrap_or(0.0)
                },
                FALLBACK_TOL,
            )?;
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    Ok((m, true))
}

fn name(scheme: &IidScheme<f64>) -> String {
    crate::engine::EstimatingScheme::name(scheme).to_string()
}

fn drift_label(quadrature_used: bool) -> &'static str {
    if quadrature_used {
        "quadrature"
    } else {
        "closed-form"
    }
}

fn matrix_parameters(
    mut report: ConditionReport,
    key: &str,
    c: &SquareMatrix<f64>,
) -> ConditionReport {
    if c.dim() == 1 {
        return report.parameter(key, c.first());
    }
    for i in 0..c.dim() {
        for j in 0..c.dim() {
            report = report.parameter(&format!("{key}[{i}][{j}]"), c.get(i, j));
        }
    }
    report
}

/// Local drift condition `(C u, γ⁻¹(θ + u) b(θ, u)) ≤ −½ (C u, u)` on a grid.
///
/// For `m > 1` the grid runs along the diagonal direction `(1, …, 1)/√m`.
/// The summary verdict is the conjunction over the grid; the witness
/// `holds_up_to` is the half-width of the largest symmetric interval around
/// zero on which every grid point satisfies the inequality. When violated,
/// the witnesses `u`, `lhs`, `rhs` give the point of largest excess (the
/// last such point on ties).
pub fn check_b1(
    scheme: &IidScheme<f64>,
    theta: &ParamVec<f64>,
    c: &SquareMatrix<f64>,
    grid: &GridSpec,
) -> Result<ConditionReport, DiagnosticsError> {
    check_psd(c)?;
    let dim = theta.dim();
    if c.dim() != dim {
        return Err(DiagnosticsError::InvalidInput(format!(
            "C has dimension {}, parameter has {dim}",
            c.dim()
        )));
    }
    let dir = direction(dim);
    let mut used_quadrature = false;
    let mut points = Vec::with_capacity(grid.n_points);
    for s in grid.points() {
        let u = dir.scale(s);
        let (b, quad) = drift_at(scheme, theta, &u)?;
        used_quadrature |= quad;
        let g_inv = scheme.unit_gamma(&(*theta + u)).invert()?.matrix;
        let cu = c.mul_vec(&u);
        let lhs = cu.dot(&g_inv.mul_vec(&b));
        let rhs = -0.5 * cu.dot(&u);
        points.push(PointCheck {
            at: s,
            lhs,
            rhs,
            holds: holds(lhs, rhs),
        });
    }

    let first_fail = points
        .iter()
        .filter(|p| !p.holds)
        .map(|p| p.at.abs())
        .fold(f64::INFINITY, f64::min);
    let holds_up_to = points
        .iter()
        .map(|p| p.at.abs())
        .filter(|&a| a < first_fail)
        .fold(0.0, f64::max);
    let mut worst: Option<&PointCheck> = None;
    for p in points.iter().filter(|p| !p.holds) {
        if worst.is_none_or(|w| p.lhs - p.rhs >= w.lhs - w.rhs) {
            worst = Some(p);
        }
    }

    let mut report = ConditionReport::new(ConditionId::B1, grid.region())
        .parameter("n_points", grid.n_points as f64)
        .parameter("relative_tolerance", COMPARE_RTOL)
        .witness("holds_up_to", holds_up_to)
        .label("drift", drift_label(used_quadrature));
    report = matrix_parameters(report, "c", c);
    if dim > 1 {
        report = report.label("direction", "diagonal");
    }
    if let Some(w) = worst {
        report = report
            .witness("u", w.at)
            .witness("lhs", w.lhs)
            .witness("rhs", w.rhs);
    }
    if used_quadrature {
        report = report.note("no closed-form drift; b(θ, u) computed by quadrature");
    }
    Ok(report.with_points(points))
}

/// Normalized second moment `E‖γ⁻¹(θ + u) ψ(θ + u)‖²` on a grid, required to
/// stay finite and at most `threshold`.
pub fn check_b2(
    scheme: &IidScheme<f64>,
    theta: &ParamVec<f64>,
    grid: &GridSpec,
    threshold: f64,
) -> Result<ConditionReport, DiagnosticsError> {
    let dir = direction(theta.dim());
    let mut used_quadrature = false;
    let mut points = Vec::with_capacity(grid.n_points);
    for s in grid.points() {
        let u = dir.scale(s);
        let (m, quad) = second_moment_at(scheme, theta, &u)?;
        used_quadrature |= quad;
        let g_inv = scheme.unit_gamma(&(*theta + u)).invert()?.matrix;
        let value = (g_inv * m * g_inv.transpose()).trace();
        points.push(PointCheck {
            at: s,
            lhs: value,
            rhs: threshold,
            holds: value.is_finite() && value <= threshold,
        });
    }
    let (arg, sup) = points
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |(a, s), p| {
            if p.lhs > s || p.lhs.is_nan() {
                (p.at, p.lhs)
            } else {
                (a, s)
            }
        });
    let mut report = ConditionReport::new(ConditionId::B2, grid.region())
        .parameter("threshold", threshold)
        .parameter("n_points", grid.n_points as f64)
        .witness("sup", sup)
        .witness("argsup", arg)
        .label("second_moment", drift_label(used_quadrature));
    if used_quadrature {
        report = report.note("no closed-form second moment; computed by quadrature");
    }
    Ok(report.with_points(points))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    NotStable,
    /// The sufficient criterion used for `m > 2` did not apply.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BMatrixEstimate {
    /// Jacobian of `R(u)` at `u = 0`.
    pub b: SquareMatrix<f64>,
    /// `S = B + ½·1`.
    pub s: SquareMatrix<f64>,
    pub stability: Stability,
    /// False when the verdict comes from Gershgorin discs (sufficient only).
    pub exact: bool,
    pub fd_step: f64,
}

/// Central finite-difference Jacobian of `R(u) = γ⁻¹(θ + u) b(θ, u)` at
/// `u = 0` and the stability of `S = B + ½·1`.
///
/// Stability is decided exactly for `m ≤ 2` (sign of the eigenvalues' real
/// parts via trace and determinant). For `m > 2` every Gershgorin disc must
/// lie in the open left half-plane; otherwise the verdict is
/// [`Stability::Inconclusive`].
pub fn estimate_b_matrix(
    scheme: &IidScheme<f64>,
    theta: &ParamVec<f64>,
    fd_step: f64,
) -> Result<BMatrixEstimate, DiagnosticsError> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(DiagnosticsError::InvalidInput(format!(
            "finite-difference step must be positive, got {fd_step}"
        )));
    }
    let dim = theta.dim();
    let r = |u: &ParamVec<f64>| -> Result<ParamVec<f64>, DiagnosticsError> {
        let (b, _) = drift_at(scheme, theta, u)?;
        Ok(scheme
            .unit_gamma(&(*theta + *u))
            .invert()?
            .matrix
            .mul_vec(&b))
    };
    let mut b = SquareMatrix::zeros(dim);
    for j in 0..dim {
        let e = ParamVec::basis(dim, j).scale(fd_step);
        let col = (r(&e)? - r(&e.scale(-1.0))?).scale(0.5 / fd_step);
        for i in 0..dim {
            b.set(i, j, col[i]);
        }
    }
    let s = b + SquareMatrix::identity(dim).scale(0.5);
    let (stability, exact) = match dim {
        1 => (stable_if(s.first() < 0.0), true),
        2 => (stable_if(s.trace() < 0.0 && s.determinant() > 0.0), true),
        _ => {
            let discs_left = (0..dim).all(|i| {
                let radius: f64 = (0..dim)
                    .filter(|&j| j != i)
                    .map(|j| s.get(i, j).abs())
                    .sum();
                s.get(i, i) + radius < 0.0
            });
            let verdict = if discs_left {
                Stability::Stable
            } else {
                Stability::Inconclusive
            };
            (verdict, false)
        }
    };
    Ok(BMatrixEstimate {
        b,
        s,
        stability,
        exact,
        fd_step,
    })
}

fn stable_if(cond: bool) -> Stability {
    if cond {
        Stability::Stable
    } else {
        Stability::NotStable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{cauchy_b, cauchy_density, cauchy_psi, iid_scheme, CauchyLocation};

    fn cauchy() -> IidScheme<f64> {
        CauchyLocation.scheme()
    }

    fn theta() -> ParamVec<f64> {
        ParamVec::scalar(1.0)
    }

    fn one() -> SquareMatrix<f64> {
        SquareMatrix::scalar(1.0)
    }

    /// Scheme with `γ = 1` and closed-form drift `R(u) = f(u)`.
    fn linear_drift(f: fn(f64) -> f64) -> IidScheme<f64> {
        iid_scheme(
            |_: &ParamVec<f64>, _| ParamVec::scalar(0.0),
            |_: &ParamVec<f64>| SquareMatrix::scalar(1.0),
            1,
        )
        .with_drift(move |_, u| ParamVec::scalar(f(u.first())))
    }

    #[test]
    fn grid_points_and_zero_snap() {
        let g = GridSpec::symmetric(1.0, 21).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 21);
        assert_eq!(p[10], 0.0);
        assert_eq!(p[0], -1.0);
        assert_eq!(p[20], 1.0);
        assert!(GridSpec::new(1.0, 1.0, 5).is_err());
        assert!(GridSpec::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn psd_check() {
        assert!(check_psd(&one()).is_ok());
        let indefinite = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(check_psd(&indefinite).is_err());
        let asym = SquareMatrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(check_psd(&asym).is_err());
        let singular = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(check_psd(&singular).is_ok());
    }

    #[test]
    fn b1_holds_inside_boundary() {
        let grid = GridSpec::symmetric(1.9, 39).unwrap();
        let r = check_b1(&cauchy(), &theta(), &one(), &grid).unwrap();
        assert!(r.verdict);
        assert!((r.witnesses["holds_up_to"] - 1.9).abs() < 1e-12);
        let zero = r.points.iter().find(|p| p.at == 0.0).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(zero.holds);
    }

    #[test]
    fn b1_violated_at_three() {
        let grid = GridSpec::symmetric(3.0, 61).unwrap();
        let r = check_b1(&cauchy(), &theta(), &one(), &grid).unwrap();
        assert!(!r.verdict);
        assert_eq!(r.witnesses["u"], 3.0);
        assert!((r.witnesses["lhs"] + 36.0 / 13.0).abs() < 1e-12);
        assert_eq!(r.witnesses["rhs"], -4.5);
        // The grid has spacing 0.1; the last holding point is |u| = 2.
        assert!((r.witnesses["holds_up_to"] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn b1_invariant_under_rescaling() {
        let grid = GridSpec::symmetric(3.0, 31).unwrap();
        let a = check_b1(&cauchy(), &theta(), &one(), &grid).unwrap();
        let b = check_b1(&cauchy(), &theta(), &SquareMatrix::scalar(7.5), &grid).unwrap();
        let va: Vec<bool> = a.points.iter().map(|p| p.holds).collect();
        let vb: Vec<bool> = b.points.iter().map(|p| p.holds).collect();
        assert_eq!(va, vb);
        assert_eq!(a.witnesses["holds_up_to"], b.witnesses["holds_up_to"]);
    }

    #[test]
    fn b1_quadrature_fallback_agrees() {
        let bare = iid_scheme(
            |t: &ParamVec<f64>, x| ParamVec::scalar(cauchy_psi(t.first(), x)),
            |_: &ParamVec<f64>| SquareMatrix::scalar(0.5),
            1,
        )
        .with_density(|t, x| cauchy_density(t.first(), x));
        let grid = GridSpec::symmetric(3.0, 13).unwrap();
        let q = check_b1(&bare, &theta(), &one(), &grid).unwrap();
        let c = check_b1(&cauchy(), &theta(), &one(), &grid).unwrap();
        assert_eq!(q.labels["drift"], "quadrature");
        assert!(!q.notes.is_empty());
        for (a, b) in q.points.iter().zip(&c.points) {
            assert!((a.lhs - b.lhs).abs() < 1e-6);
            assert_eq!(a.holds, b.holds);
        }
    }

    #[test]
    fn b1_without_drift_or_density_errors() {
        let bare = iid_scheme(
            |t: &ParamVec<f64>, x| ParamVec::scalar(cauchy_psi(t.first(), x)),
            |_: &ParamVec<f64>| SquareMatrix::scalar(0.5),
            1,
        );
        let grid = GridSpec::symmetric(1.0, 5).unwrap();
        assert!(matches!(
            check_b1(&bare, &theta(), &one(), &grid),
            Err(DiagnosticsError::MissingDrift(_))
        ));
    }

    #[test]
    fn b2_cauchy_normalized_moment() {
        let grid = GridSpec::symmetric(1.0, 21).unwrap();
        let r = check_b2(&cauchy(), &theta(), &grid, DEFAULT_B2_THRESHOLD).unwrap();
        assert!(r.verdict);
        let zero = r.points.iter().find(|p| p.at == 0.0).unwrap();
        assert_eq!(zero.lhs, 2.0);
        // 4·2(4 + 3u²)/(4 + u²)² increases up to u² = 4/3, so on |u| ≤ 1 the
        // supremum sits at the grid edge: 4·0.56.
        assert!((r.witnesses["sup"] - 2.24).abs() < 1e-12);
        assert_eq!(r.witnesses["argsup"].abs(), 1.0);
        let wide = check_b2(
            &cauchy(),
            &theta(),
            &GridSpec::symmetric(3.0, 3001).unwrap(),
            10.0,
        )
        .unwrap();
        assert!((wide.witnesses["sup"] - 2.25).abs() < 1e-6);
        let threshold_low = check_b2(&cauchy(), &theta(), &grid, 1.5).unwrap();
        assert!(!threshold_low.verdict);
    }

    #[test]
    fn b2_degenerate_scheme() {
        let zero = iid_scheme(
            |_: &ParamVec<f64>, _| ParamVec::scalar(0.0),
            |_: &ParamVec<f64>| SquareMatrix::scalar(1.0),
            1,
        )
        .with_second_moment(|_, _| SquareMatrix::scalar(0.0));
        let grid = GridSpec::symmetric(1.0, 5).unwrap();
        let r = check_b2(&zero, &theta(), &grid, 1.0).unwrap();
        assert_eq!(r.witnesses["sup"], 0.0);
    }

    #[test]
    fn b_matrix_cauchy() {
        let est = estimate_b_matrix(&cauchy(), &theta(), 1e-4).unwrap();
        // R(u) = −4u/(4 + u²) has derivative −1 at zero.
        let analytic = {
            let h = 1e-4;
            (2.0 * cauchy_b(h) - 2.0 * cauchy_b(-h)) / (2.0 * h)
        };
        assert!((est.b.first() + 1.0).abs() < 1e-6);
        assert!((est.b.first() - analytic).abs() < 1e-12);
        assert!((est.s.first() + 0.5).abs() < 1e-6);
        assert_eq!(est.stability, Stability::Stable);
        assert!(est.exact);
    }

    #[test]
    fn b_matrix_boundary_cases() {
        let half = estimate_b_matrix(&linear_drift(|u| -0.5 * u), &theta(), 1e-3).unwrap();
        assert!((half.b.first() + 0.5).abs() < 1e-12);
        assert_eq!(half.stability, Stability::NotStable);
        let full = estimate_b_matrix(&linear_drift(|u| -u), &theta(), 1e-3).unwrap();
        assert_eq!(full.stability, Stability::Stable);
    }

    #[test]
    fn b_matrix_two_and_three_dims() {
        let rot = |dim: usize, a: f64| {
            iid_scheme(
                move |_: &ParamVec<f64>, _| ParamVec::zeros(dim),
                move |_: &ParamVec<f64>| SquareMatrix::identity(dim),
                dim,
            )
            .with_drift(move |_, u| {
                // B = −1 plus a skew coupling of strength a between the first two axes.
                let mut out = u.scale(-1.0);
                out[0] = out[0] + a * u[1];
                out[1] = out[1] - a * u[0];
                out
            })
        };
        let t2 = ParamVec::zeros(2);
        let e2 = estimate_b_matrix(&rot(2, 3.0), &t2, 1e-3).unwrap();
        assert_eq!(e2.stability, Stability::Stable);
        assert!(e2.exact);
        let t3 = ParamVec::zeros(3);
        let small = estimate_b_matrix(&rot(3, 0.1), &t3, 1e-3).unwrap();
        assert_eq!(small.stability, Stability::Stable);
        assert!(!small.exact);
        // Eigenvalues −½ ± 3i are stable, but the discs cross the axis.
        let large = estimate_b_matrix(&rot(3, 3.0), &t3, 1e-3).unwrap();
        assert_eq!(large.stability, Stability::Inconclusive);
    }
}
