//! Rate conditions for `a_t^{2δ}(Δ_t, C Δ_t) → 0`:
//!
//! * (R1) `Δa_t / a_{t−1} → 0`;
//! * (R2) eventually `2(C Δ_{t−1}, Γ_t⁻¹ b_t) + 𝒫_t ≤ −λ_t (C Δ_{t−1}, Δ_{t−1})`,
//!   with `Σ [Δa_t/a_t − λ_t]⁺ < ∞`;
//! * (R3) `Σ a_t^ε [E‖Γ_t⁻¹ψ_t‖² − 𝒫_t]⁺ < ∞`.
//!
//! All Γ, b and ψ are evaluated at `θ + Δ_{t−1}`, i.e. at `θ̂_{t−1}`.

use serde::Serialize;

use crate::engine::{accumulators, EstimatingScheme, Past, Trajectory};
use crate::linalg::SquareMatrix;

use super::ktrace::validate_a;
use super::report::{ConditionId, ConditionReport, PointCheck, Region};
use super::series::{last_quartile_start, partial_sums, plateau, DEFAULT_PLATEAU_TOL};
use super::DiagnosticsError;

/// Default margin `ε̃` in the additive-family `λ_t`.
pub const DEFAULT_EPS_TILDE: f64 = 0.05;

/// Default rate exponent.
pub const DEFAULT_DELTA: f64 = 0.4;

/// Choice of the predictable process `𝒫_t` in (R2)/(R3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PChoice {
    Zero,
    /// `‖Γ_t⁻¹ b_t‖²`.
    #[default]
    DriftSquared,
}

/// Per-step inputs of the R-conditions along one trajectory, `t = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RSeries {
    /// `a_0..a_n`.
    pub a: Vec<f64>,
    pub lambda: Vec<f64>,
    pub p: Vec<f64>,
    /// `E{‖Γ_t⁻¹ψ_t‖² | past}`.
    pub moment: Vec<f64>,
    /// Left side of the (R2) inequality.
    pub r21_lhs: Vec<f64>,
    /// Right side `−λ_t (C Δ_{t−1}, Δ_{t−1})`.
    pub r21_rhs: Vec<f64>,
    pub skipped: Vec<bool>,
}

/// `λ_t = 1/t`, the i.i.d. choice with `a_t = t`.
pub fn iid_lambda(n: usize) -> Vec<f64> {
    (1..=n).map(|t| 1.0 / t as f64).collect()
}

/// `λ_t = 2(1 − ε̃) h/H_t − (1 + ε̃)² h²/H_t²` for additive families, where
/// `h = h(X_{t−1})`; zero while `H_t = 0`.
pub fn additive_lambda(h: &[f64], big_h: &[f64], eps_tilde: f64) -> Vec<f64> {
    h.iter()
        .zip(big_h)
        .map(|(&h, &hh)| {
            if hh > 0.0 {
                let r = h / hh;
                2.0 * (1.0 - eps_tilde) * r - (1.0 + eps_tilde).powi(2) * r * r
            } else {
                0.0
            }
        })
        .collect()
}

/// `h/H_t − λ_t = (h/H_t)(−1 + 2ε̃ + (1 + ε̃)² h/H_t)` for the additive `λ_t`.
pub fn neg_term(h: f64, big_h: f64, eps_tilde: f64) -> f64 {
    let r = h / big_h;
    r * (-1.0 + 2.0 * eps_tilde + (1.0 + eps_tilde).powi(2) * r)
}

/// Evaluates the (R2)/(R3) ingredients along `trajectory` from the scheme's
/// closed-form conditional moments.
pub fn r_series<S: EstimatingScheme<f64> + ?Sized>(
    scheme: &S,
    trajectory: &Trajectory<f64>,
    c: &SquareMatrix<f64>,
    a: Vec<f64>,
    lambda: Vec<f64>,
    p_choice: PChoice,
) -> Result<RSeries, DiagnosticsError> {
    let n = trajectory.records.len();
    validate_a(&a, n)?;
    if lambda.len() != n {
        return Err(DiagnosticsError::InvalidInput(format!(
            "lambda needs {n} entries, got {}",
            lambda.len()
        )));
    }
    let observations = trajectory.observations();
    let accs = accumulators(scheme, &observations);
    let estimates = trajectory.estimates();
    let errors = trajectory.errors();
    let mut out = RSeries {
        a,
        lambda,
        p: Vec::with_capacity(n),
        moment: Vec::with_capacity(n),
        r21_lhs: Vec::with_capacity(n),
        r21_rhs: Vec::with_capacity(n),
        skipped: Vec::with_capacity(n),
    };
    for t in 1..=n {
        let d = errors[t - 1];
        let past = Past::new(&observations[..t - 1], &accs[t - 1]);
        let gamma = scheme.gamma(t, &estimates[t - 1], &past);
        let (p, moment, lhs, rhs, skipped) = match gamma.invert() {
            Ok(inv) => {
                let g = inv.matrix;
                let b = scheme
                    .drift(t, &trajectory.theta_true, &d, &past)
                    .ok_or_else(|| DiagnosticsError::MissingDrift(scheme.name().into()))?;
                let m = scheme
                    .psi_second_moment(t, &trajectory.theta_true, &d, &past)
                    .ok_or_else(|| DiagnosticsError::MissingSecondMoment(scheme.name().into()))?;
                let gb = g.mul_vec(&b);
                let p = match p_choice {
                    PChoice::Zero => 0.0,
                    PChoice::DriftSquared => gb.norm_sq(),
                };
                let moment = (g * m * g.transpose()).trace();
                let cd = c.mul_vec(&d);
                let lhs = 2.0 * cd.dot(&gb) + p;
                let rhs = -out.lambda[t - 1] * cd.dot(&d);
                (p, moment, lhs, rhs, false)
            }
            Err(_) => (0.0, 0.0, 0.0, 0.0, true),
        };
        out.p.push(p);
        out.moment.push(moment);
        out.r21_lhs.push(lhs);
        out.r21_rhs.push(rhs);
        out.skipped.push(skipped);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RConfig {
    /// Exponent `ε ∈ (0, 1)` in (R3).
    pub epsilon: f64,
    /// Largest last-quartile value of `Δa_t/a_{t−1}` accepted for (R1).
    pub ratio_tol: f64,
    pub plateau_tol: f64,
}

impl Default for RConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            ratio_tol: 0.01,
            plateau_tol: DEFAULT_PLATEAU_TOL,
        }
    }
}

/// Horizon reading of (R1)–(R3). The summary verdict is the conjunction of
/// the three parts:
///
/// * R1: the largest `Δa_t/a_{t−1}` over the last quartile is at most `ratio_tol`;
/// * R2: the (R2) inequality holds at every non-skipped step of the last
///   quartile and the partial sums of `[Δa_t/a_t − λ_t]⁺` plateau;
/// * R3: the partial sums of `a_t^ε [E‖Γ_t⁻¹ψ_t‖² − 𝒫_t]⁺` plateau.
pub fn check_r_conditions(
    series: &RSeries,
    cfg: RConfig,
) -> Result<ConditionReport, DiagnosticsError> {
    let n = series.lambda.len();
    if n == 0 {
        return Err(DiagnosticsError::InvalidInput("empty R-series".into()));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(DiagnosticsError::InvalidInput(format!(
            "epsilon must lie in (0, 1), got {}",
            cfg.epsilon
        )));
    }
    let a = &series.a;
    let q = last_quartile_start(n);
    let region = Region::t(1, n);

    let ratios: Vec<(usize, f64)> = (1..=n)
        .filter(|&t| a[t - 1] > 0.0)
        .map(|t| (t, (a[t] - a[t - 1]) / a[t - 1]))
        .collect();
    let tail_max = ratios
        .iter()
        .filter(|(t, _)| *t > q)
        .fold(f64::NEG_INFINITY, |m, (_, r)| m.max(*r));
    let mut r1 = ConditionReport::new(ConditionId::R1, Region::t(q + 1, n))
        .parameter("ratio_tol", cfg.ratio_tol)
        .witness("tail_max", tail_max)
        .witness("final", ratios.last().map_or(f64::NAN, |r| r.1));
    r1.verdict = tail_max <= cfg.ratio_tol;

    let r22_terms: Vec<f64> = (1..=n)
        .map(|t| {
            if a[t] > 0.0 {
                ((a[t] - a[t - 1]) / a[t] - series.lambda[t - 1]).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let r22 = plateau(&partial_sums(&r22_terms), cfg.plateau_tol);
    let tail_points: Vec<PointCheck> = (q..n)
        .filter(|&i| !series.skipped[i])
        .map(|i| {
            let (lhs, rhs) = (series.r21_lhs[i], series.r21_rhs[i]);
            PointCheck {
                at: (i + 1) as f64,
                lhs,
                rhs,
                holds: lhs <= rhs + 1e-12 * lhs.abs().max(rhs.abs()),
            }
        })
        .collect();
    let violations = tail_points.iter().filter(|p| !p.holds).count();
    let mut r2 = ConditionReport::new(ConditionId::R2, region.clone())
        .parameter("plateau_tol", cfg.plateau_tol)
        .witness("r21_tail_violations", violations as f64)
        .witness("r22_total", r22.total)
        .witness("r22_tail_increase", r22.tail_increase);
    r2.verdict = violations == 0 && r22.plateaued;

    let r3_terms: Vec<f64> = (1..=n)
        .map(|t| a[t].powf(cfg.epsilon) * (series.moment[t - 1] - series.p[t - 1]).max(0.0))
        .collect();
    let r3p = plateau(&partial_sums(&r3_terms), cfg.plateau_tol);
    let mut r3 = ConditionReport::new(ConditionId::R3, region.clone())
        .parameter("epsilon", cfg.epsilon)
        .parameter("plateau_tol", cfg.plateau_tol)
        .witness("total", r3p.total)
        .witness("tail_increase", r3p.tail_increase);
    r3.verdict = r3p.plateaued;

    Ok(ConditionReport::new(ConditionId::R, region)
        .parameter("epsilon", cfg.epsilon)
        .with_parts(vec![r1, r2, r3]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::simulate;
    use crate::linalg::ParamVec;
    use crate::models::CauchyLocation;

    #[test]
    fn neg_term_example() {
        let v = neg_term(1.0, 10.0, 0.1);
        assert!((v + 0.0679).abs() < 1e-15);
        // Identity with the λ_t definition.
        let lam = additive_lambda(&[1.0], &[10.0], 0.1)[0];
        assert!((1.0 / 10.0 - lam - v).abs() < 1e-15);
    }

    #[test]
    fn lambda_zero_without_information() {
        assert_eq!(additive_lambda(&[0.0, 1.0], &[0.0, 1.0], 0.05)[0], 0.0);
        assert_eq!(iid_lambda(4), vec![1.0, 0.5, 1.0 / 3.0, 0.25]);
    }

    #[test]
    fn step_count_ratio_tail() {
        let n = 1000;
        let series = RSeries {
            a: (0..=n).map(|t| t as f64).collect(),
            lambda: iid_lambda(n),
            p: vec![0.0; n],
            moment: vec![0.0; n],
            r21_lhs: vec![-1.0; n],
            r21_rhs: vec![0.0; n],
            skipped: vec![false; n],
        };
        let r = check_r_conditions(&series, RConfig::default()).unwrap();
        let r1 = r.part(ConditionId::R1).unwrap();
        assert_eq!(r1.witnesses["tail_max"], 1.0 / 750.0);
        assert_eq!(r1.witnesses["final"], 1.0 / 999.0);
        assert!(r1.verdict);
        assert_eq!(r.part(ConditionId::R2).unwrap().witnesses["r22_total"], 0.0);
        assert!(r.verdict);
    }

    #[test]
    fn cauchy_trajectory_satisfies_r() {
        let scheme = CauchyLocation.scheme::<f64>();
        let n = 4000;
        let traj = simulate(
            &scheme,
            &ParamVec::scalar(1.0),
            &ParamVec::scalar(0.0),
            n,
            17,
        )
        .unwrap();
        let a = (0..=n).map(|t| t as f64).collect();
        let s = r_series(
            &scheme,
            &traj,
            &SquareMatrix::scalar(1.0),
            a,
            iid_lambda(n),
            PChoice::DriftSquared,
        )
        .unwrap();
        let r = check_r_conditions(&s, RConfig::default()).unwrap();
        assert!(r.verdict, "{r:#?}");
    }

    #[test]
    fn rejects_bad_epsilon() {
        let series = RSeries {
            a: vec![0.0, 1.0],
            lambda: vec![1.0],
            p: vec![0.0],
            moment: vec![0.0],
            r21_lhs: vec![0.0],
            r21_rhs: vec![0.0],
            skipped: vec![false],
        };
        let cfg = RConfig {
            epsilon: 1.0,
            ..RConfig::default()
        };
        assert!(check_r_conditions(&series, cfg).is_err());
    }
}
