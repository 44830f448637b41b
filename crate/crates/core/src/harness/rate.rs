use serde::Serialize;

use super::stats::{fit_line, median, LineFit, Quartiles};
use super::{fisher_ratio, AChoice, Ensemble, HarnessError};

pub const MIN_CHECKPOINTS: usize = 3;
pub const MIN_REPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub t: usize,
    /// Quartiles of `‖Δ_t‖` across replications.
    pub delta_abs: Quartiles,
    /// Quartiles of `a_t^δ ‖Δ_t‖`.
    pub scaled: Quartiles,
    /// Median of `I_t/t` or `I_t/κ_t`, when recorded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_median: Option<f64>,
    pub median_stalled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub reps: usize,
    pub master_seed: u64,
    pub delta: f64,
    pub a_choice: AChoice,
    pub checkpoints: Vec<CheckpointSummary>,
    /// Least-squares fit of `ln median ‖Δ_t‖` on `ln t`.
    pub slope: LineFit,
    /// Median scaled errors decrease strictly from each checkpoint to the next.
    pub scaled_strictly_decreasing: bool,
    pub notes: Vec<String>,
}

/// Summarizes an ensemble. Needs at least [`MIN_CHECKPOINTS`] checkpoints
/// and [`MIN_REPS`] replications, and positive median errors for the
/// log–log fit.
pub fn estimate_rate(ensemble: &Ensemble) -> Result<RateReport, HarnessError> {
    let cfg = &ensemble.config;
    let cps = ensemble.checkpoints();
    if cps.len() < MIN_CHECKPOINTS {
        return Err(HarnessError::InsufficientData(format!(
            "{} checkpoints, need at least {MIN_CHECKPOINTS}",
            cps.len()
        )));
    }
    if ensemble.runs.len() < MIN_REPS {
        return Err(HarnessError::InsufficientData(format!(
            "{} replications, need at least {MIN_REPS}",
            ensemble.runs.len()
        )));
    }
    let theta = cfg.theta_true.first();
    let summaries: Vec<CheckpointSummary> = cps
        .iter()
        .enumerate()
        .map(|(k, &t)| CheckpointSummary {
            t,
            delta_abs: Quartiles::of(&ensemble.column(k, |p| p.delta_abs)),
            scaled: Quartiles::of(&ensemble.column(k, |p| p.scaled)),
            ratio_median: cfg
                .fisher_ratio
                .then(|| median(&ensemble.column(k, |p| fisher_ratio(theta, p.t, p.log_info)))),
            median_stalled: median(&ensemble.column(k, |p| p.stalled as f64)),
        })
        .collect();
    if let Some(s) = summaries.iter().find(|s| !(s.delta_abs.q50 > 0.0)) {
        return Err(HarnessError::InsufficientData(format!(
            "median error at t = {} is {}, cannot take logs",
            s.t, s.delta_abs.q50
        )));
    }
    let x: Vec<f64> = summaries.iter().map(|s| (s.t as f64).ln()).collect();
    let y: Vec<f64> = summaries.iter().map(|s| s.delta_abs.q50.ln()).collect();
    let slope = fit_line(&x, &y);
    let scaled_strictly_decreasing = summaries
        .windows(2)
        .all(|w| w[1].scaled.q50 < w[0].scaled.q50);
    Ok(RateReport {
        reps: ensemble.runs.len(),
        master_seed: cfg.master_seed,
        delta: cfg.delta,
        a_choice: cfg.a_choice,
        checkpoints: summaries,
        slope,
        scaled_strictly_decreasing,
        notes: vec![
            "the theory gives a_t^delta |Delta_t| -> 0 for every delta < 1/2 but no rate constant; slope bands are calibration".into(),
        ],
    })
}
