//! The one-step bound `K_t` on the conditional increase of
//! `V_t(Δ) = (C_t Δ, Δ)` with `C_t = C·a_t^{2δ}`:
//!
//! ```text
//! K_t = ΔV_t(Δ_{t−1})
//!     + 2 (C_t Δ_{t−1}, Γ_t⁻¹(θ + Δ_{t−1}) b_t(θ, Δ_{t−1}))
//!     + E{(Γ_t⁻¹ψ_t)ᵀ C_t Γ_t⁻¹ψ_t | past}   (ψ_t at θ + Δ_{t−1})
//! ```
//!
//! evaluated from closed-form conditional moments along a trajectory.

use serde::Serialize;

use crate::engine::{accumulators, EstimatingScheme, Past, Trajectory};
use crate::linalg::SquareMatrix;

use super::series::{
    plateau, robbins_siegmund_monitor, CompensatedSum, MonitorConfig, Plateau,
    SupermartingaleReport,
};
use super::DiagnosticsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KTraceRow {
    pub t: usize,
    /// `V_{t−1}(Δ_{t−1})`.
    pub v_prev: f64,
    /// `V_t(Δ_{t−1}) − V_{t−1}(Δ_{t−1})`.
    pub dv: f64,
    pub drift: f64,
    pub moment: f64,
    /// `dv + drift + moment`.
    pub k: f64,
    /// `(1 + V_{t−1})⁻¹ [K_t]⁺`.
    pub premise_term: f64,
    pub premise_partial_sum: f64,
    /// `V_t(Δ_t)`.
    pub v_next: f64,
    /// `Γ_t` was singular: the estimate did not move and the drift and
    /// moment terms are zero.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KTrace {
    pub delta: f64,
    pub rows: Vec<KTraceRow>,
}

impl KTrace {
    pub fn premise_partial_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.premise_partial_sum).collect()
    }

    /// `V_t(Δ_t)` for `t = 1..=n`.
    pub fn v_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.v_next).collect()
    }

    pub fn premise_plateau(&self, tol: f64) -> Plateau {
        plateau(&self.premise_partial_sums(), tol)
    }

    /// Feeds `X_t = V_t(Δ_t)` and `β_t = ξ_t = (1 + V_{t−1})⁻¹[K_t]⁺` (with
    /// `ζ = 0`) to the almost-supermartingale monitor.
    pub fn monitor(&self, cfg: MonitorConfig) -> Result<SupermartingaleReport, DiagnosticsError> {
        let x = self.v_series();
        let beta: Vec<f64> = self.rows.iter().map(|r| r.premise_term).collect();
        let zeta = vec![0.0; x.len()];
        robbins_siegmund_monitor(&x, &beta, &beta, &zeta, cfg)
    }
}

/// Builds the K-trace of `trajectory` under `scheme`.
///
/// `a` holds `a_0, …, a_n` for a trajectory of `n` steps and must be
/// non-negative and non-decreasing; `delta` lies in `[0, ½)`, with `δ = 0`
/// meaning a constant `C_t = C`.
pub fn k_trace<S: EstimatingScheme<f64> + ?Sized>(
    scheme: &S,
    trajectory: &Trajectory<f64>,
    c: &SquareMatrix<f64>,
    a: &[f64],
    delta: f64,
) -> Result<KTrace, DiagnosticsError> {
    let n = trajectory.records.len();
    if !(0.0..0.5).contains(&delta) {
        return Err(DiagnosticsError::InvalidInput(format!(
            "delta must lie in [0, 1/2), got {delta}"
        )));
    }
    validate_a(a, n)?;
    super::iid_checks::check_psd(c)?;

    let observations = trajectory.observations();
    let accs = accumulators(scheme, &observations);
    let estimates = trajectory.estimates();
    let errors = trajectory.errors();
    let weight = |t: usize| a[t].powf(2.0 * delta);

    let mut sum = CompensatedSum::default();
    let mut rows = Vec::with_capacity(n);
    for t in 1..=n {
        let d = errors[t - 1];
        let c_prev = c.scale(weight(t - 1));
        let c_t = c.scale(weight(t));
        let v_prev = c_prev.quad_form(&d);
        let dv = c_t.quad_form(&d) - v_prev;
        let past = Past::new(&observations[..t - 1], &accs[t - 1]);
        let gamma = scheme.gamma(t, &estimates[t - 1], &past);
        let (drift, moment, skipped) = match gamma.invert() {
            Ok(inv) => {
                let g = inv.matrix;
                let b = scheme
                    .drift(t, &trajectory.theta_true, &d, &past)
                    .ok_or_else(|| DiagnosticsError::MissingDrift(scheme.name().into()))?;
                let m = scheme
                    .psi_second_moment(t, &trajectory.theta_true, &d, &past)
                    .ok_or_else(|| DiagnosticsError::MissingSecondMoment(scheme.name().into()))?;
                let drift = 2.0 * c_t.mul_vec(&d).dot(&g.mul_vec(&b));
                let moment = (c_t * g * m * g.transpose()).trace();
                (drift, moment, false)
            }
            Err(_) => (0.0, 0.0, true),
        };
        let k = dv + drift + moment;
        let premise_term = k.max(0.0) / (1.0 + v_prev);
        sum.add(premise_term);
        rows.push(KTraceRow {
            t,
            v_prev,
            dv,
            drift,
            moment,
            k,
            premise_term,
            premise_partial_sum: sum.value(),
            v_next: c_t.quad_form(&errors[t]),
            skipped,
        });
    }
    Ok(KTrace { delta, rows })
}

pub(super) fn validate_a(a: &[f64], n: usize) -> Result<(), DiagnosticsError> {
    if a.len() != n + 1 {
        return Err(DiagnosticsError::InvalidInput(format!(
            "a-series needs {} entries (a_0..a_n), got {}",
            n + 1,
            a.len()
        )));
    }
    if a.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(DiagnosticsError::InvalidInput(
            "a-series must be finite and non-negative".into(),
        ));
    }
    if a.windows(2).any(|w| w[1] < w[0]) {
        return Err(DiagnosticsError::InvalidInput(
            "a-series must be non-decreasing".into(),
        ));
    }
    Ok(())
}
