//! Checks specific to conditionally additive exponential families: the
//! consistency conditions (M1)–(M3) and the `𝒩_t` statistic with
//! `V(u) = u²`, whose negative part must diverge (G2) and whose positive
//! part along the estimates must be summable (G3).

use serde::Serialize;

use crate::engine::{accumulators, Trajectory};
use crate::models::{AdditiveExpFamily, AdditiveScheme};

use super::iid_checks::GridSpec;
use super::report::{ConditionId, ConditionReport, Region};
use super::series::{last_quartile_start, plateau, CompensatedSum, DEFAULT_PLATEAU_TOL};
use super::DiagnosticsError;

/// Default bound on the last-quartile maximum of `h(X_{t−1})/H_t`.
pub const DEFAULT_M1_TOL: f64 = 0.01;

/// `a/b` with the convention `0/0 = 0`.
fn ratio0(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// `h(X_{t−1})` and `H_t` for `t = 1..=n`.
pub fn additive_weights(
    scheme: &AdditiveScheme<f64>,
    observations: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let fam = scheme.family();
    let path = scheme.path(observations);
    let h: Vec<f64> = path[..observations.len()]
        .iter()
        .map(|&x| fam.h(x))
        .collect();
    let big_h = accumulators(scheme, observations)
        .iter()
        .map(|m| m.first())
        .collect();
    (h, big_h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MConfig {
    pub m1_tol: f64,
}

impl Default for MConfig {
    fn default() -> Self {
        Self {
            m1_tol: DEFAULT_M1_TOL,
        }
    }
}

/// (M1) along the observed path, (M2) and (M3) on the grid `[lo, hi]`.
///
/// * M1: largest `h(X_{t−1})/H_t` over the last quartile, at most `m1_tol`;
/// * M2: `inf γ̈ > 0` and `sup γ̈ < ∞` on the grid;
/// * M3: smallest `B` with `(1 + γ̇²(u))/γ̈²(u) ≤ B(1 + u²)` on the grid, finite.
///
/// When `γ̇` is linear the consistency result needs only (M1); M2 and M3 are
/// then reported for information and do not enter the summary verdict.
pub fn check_m_conditions(
    scheme: &AdditiveScheme<f64>,
    grid: &GridSpec,
    observations: &[f64],
    cfg: MConfig,
) -> Result<ConditionReport, DiagnosticsError> {
    if observations.is_empty() {
        return Err(DiagnosticsError::InvalidInput(
            "M1 needs a non-empty trajectory".into(),
        ));
    }
    let fam = scheme.family();
    let n = observations.len();
    let (h, big_h) = additive_weights(scheme, observations);
    let q = last_quartile_start(n);
    let tail_max = (q..n)
        .filter(|&i| big_h[i] > 0.0)
        .map(|i| h[i] / big_h[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut m1 = ConditionReport::new(ConditionId::M1, Region::t(q + 1, n))
        .parameter("m1_tol", cfg.m1_tol)
        .witness("tail_max", tail_max);
    m1.verdict = tail_max <= cfg.m1_tol;

    let us = grid.points();
    let curv: Vec<f64> = us.iter().map(|&u| fam.gddot(u)).collect();
    let inf = curv.iter().copied().fold(f64::INFINITY, f64::min);
    let sup = curv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut m2 = ConditionReport::new(ConditionId::M2, Region::u(grid.lo, grid.hi))
        .witness("inf", inf)
        .witness("sup", sup);
    m2.verdict = inf > 0.0 && sup.is_finite();

    let b = us
        .iter()
        .map(|&u| (1.0 + fam.gdot(u).powi(2)) / (fam.gddot(u).powi(2) * (1.0 + u * u)))
        .fold(f64::NEG_INFINITY, |m, v| {
            if v.is_nan() {
                f64::INFINITY
            } else {
                m.max(v)
            }
        });
    let mut m3 = ConditionReport::new(ConditionId::M3, Region::u(grid.lo, grid.hi)).witness("b", b);
    m3.verdict = b.is_finite();

    let linear = fam.has_linear_gdot();
    let mut report = ConditionReport::new(ConditionId::M, Region::t(1, n))
        .parameter("n_points", grid.n_points as f64)
        .label(
            "branch",
            if linear {
                "linear-gdot"
            } else {
                "bounded-curvature"
            },
        );
    report.verdict = m1.verdict && (linear || (m2.verdict && m3.verdict));
    if linear {
        report = report.note("gdot is linear: M2 and M3 are informational");
    }
    report.parts = vec![m1, m2, m3];
    Ok(report)
}

/// `𝒩_t(u)` for `V(u) = u²`:
///
/// `(h/H)·r·(2u + (h/H)·r) + (h/H²)·γ̈(θ)/γ̈²(θ + u)` with
/// `r = (γ̇(θ) − γ̇(θ + u))/γ̈(θ + u)`, which is the expanded form
/// `(h/H)·r·u·(2 + (h/H)·r/u) + …` with the `u = 0` limit built in.
///
/// Requires `H > 0`.
pub fn script_n(fam: &AdditiveExpFamily<f64>, theta: f64, u: f64, h: f64, big_h: f64) -> f64 {
    debug_assert!(big_h > 0.0);
    let g = fam.gddot(theta + u);
    let r = ratio0(fam.gdot(theta) - fam.gdot(theta + u), g);
    let w = h / big_h;
    w * r * (2.0 * u + w * r) + ratio0(h * fam.gddot(theta), big_h * big_h * g * g)
}

/// Left side of `2 + (h/H)(γ̇(θ) − γ̇(θ + u))/(u γ̈(θ + u)) ≥ 1`, with the
/// `u → 0` limit `2 − h/H`.
fn gr1(fam: &AdditiveExpFamily<f64>, theta: f64, u: f64, w: f64) -> f64 {
    let q = if u == 0.0 {
        -1.0
    } else {
        (fam.gdot(theta) - fam.gdot(theta + u)) / (u * fam.gddot(theta + u))
    };
    2.0 + w * q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GTraceRow {
    pub t: usize,
    pub h: f64,
    pub big_h: f64,
    /// `𝒩_t(Δ_{t−1})`.
    pub n_at_error: f64,
    /// `inf 𝒩_t(u)` over `ε ≤ u² ≤ 1/ε`.
    pub inf_n: f64,
    pub g2_partial_sum: f64,
    pub g3_partial_sum: f64,
    /// Smallest left side of the `≥ 1` growth inequality over the band.
    pub gr1_min: f64,
    /// `H_t = 0`; all terms are zero.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GTrace {
    pub epsilon: f64,
    pub rows: Vec<GTraceRow>,
}

impl GTrace {
    /// (G2) is read as "partial sums of `inf [𝒩_t]⁻` do not plateau"; (G3)
    /// as "partial sums of `(1 + Δ²_{t−1})⁻¹[𝒩_t(Δ_{t−1})]⁺` plateau".
    pub fn report(&self, plateau_tol: f64) -> ConditionReport {
        let n = self.rows.len();
        let g2_sums: Vec<f64> = self.rows.iter().map(|r| r.g2_partial_sum).collect();
        let g3_sums: Vec<f64> = self.rows.iter().map(|r| r.g3_partial_sum).collect();
        let g2p = plateau(&g2_sums, plateau_tol);
        let g3p = plateau(&g3_sums, plateau_tol);
        let q = last_quartile_start(n);
        let gr1_tail = self.rows[q.min(n)..]
            .iter()
            .filter(|r| !r.skipped)
            .map(|r| r.gr1_min)
            .fold(f64::INFINITY, f64::min);

        let mut g2 = ConditionReport::new(ConditionId::G2, Region::t(1, n))
            .witness("total", g2p.total)
            .witness("tail_increase", g2p.tail_increase)
            .note("divergence is judged on this trajectory only; a positive-probability event cannot be certified from one path");
        g2.verdict = !g2p.plateaued && g2p.total > 0.0;
        let mut g3 = ConditionReport::new(ConditionId::G3, Region::t(1, n))
            .witness("total", g3p.total)
            .witness("tail_increase", g3p.tail_increase);
        g3.verdict = g3p.plateaued;

        ConditionReport::new(ConditionId::G, Region::t(1, n))
            .parameter("epsilon", self.epsilon)
            .parameter("plateau_tol", plateau_tol)
            .witness("gr1_tail_min", gr1_tail)
            .label("lyapunov", "u^2")
            .with_parts(vec![g2, g3])
    }

    pub fn default_report(&self) -> ConditionReport {
        self.report(DEFAULT_PLATEAU_TOL)
    }
}

/// Evaluates `𝒩_t` along an additive-family trajectory. The infimum in
/// (G2) is taken over `n_band` points on each side of the band
/// `√ε ≤ |u| ≤ 1/√ε`.
pub fn g_trace(
    scheme: &AdditiveScheme<f64>,
    trajectory: &Trajectory<f64>,
    epsilon: f64,
    n_band: usize,
) -> Result<GTrace, DiagnosticsError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DiagnosticsError::InvalidInput(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if n_band < 2 {
        return Err(DiagnosticsError::InvalidInput(
            "need at least 2 band points".into(),
        ));
    }
    let fam = scheme.family();
    let theta = trajectory.theta_true.first();
    let observations = trajectory.observations();
    let (h, big_h) = additive_weights(scheme, &observations);
    let errors = trajectory.errors();
    let (lo, hi) = (epsilon.sqrt(), 1.0 / epsilon.sqrt());
    let band: Vec<f64> = GridSpec::new(lo, hi, n_band)?
        .points()
        .into_iter()
        .flat_map(|u| [-u, u])
        .collect();

    let (mut s2, mut s3) = (CompensatedSum::default(), CompensatedSum::default());
    let mut rows = Vec::with_capacity(observations.len());
    for (i, (&hv, &hh)) in h.iter().zip(&big_h).enumerate() {
        let t = i + 1;
        let d = errors[i].first();
        if hh <= 0.0 {
            rows.push(GTraceRow {
                t,
                h: hv,
                big_h: hh,
                n_at_error: 0.0,
                inf_n: 0.0,
                g2_partial_sum: s2.value(),
                g3_partial_sum: s3.value(),
                gr1_min: f64::NAN,
                skipped: true,
            });
            continue;
        }
        let w = hv / hh;
        let inf_n = band
            .iter()
            .map(|&u| script_n(fam, theta, u, hv, hh))
            .fold(f64::INFINITY, f64::min);
        let gr1_min = band
            .iter()
            .map(|&u| gr1(fam, theta, u, w))
            .fold(f64::INFINITY, f64::min);
        let n_at_error = script_n(fam, theta, d, hv, hh);
        s2.add((-inf_n).max(0.0));
        s3.add(n_at_error.max(0.0) / (1.0 + d * d));
        rows.push(GTraceRow {
            t,
            h: hv,
            big_h: hh,
            n_at_error,
            inf_n,
            g2_partial_sum: s2.value(),
            g3_partial_sum: s3.value(),
            gr1_min,
            skipped: false,
        });
    }
    Ok(GTrace { epsilon, rows })
}
