//! Reproducible Monte Carlo experiments.
//!
//! Replication `r` of an experiment with master seed `s` simulates from
//! `SimRng::new(derive_seed(s, r))`, so every replication is a pure function
//! of `(s, r)` and the ensemble is identical under any thread count.
//! Replications are gathered in index order before any summary is formed.

mod ols;
mod rate;
mod stats;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{EngineError, EstimatingScheme, Estimator};
use crate::linalg::ParamVec;
use crate::models::{log_fisher_rate_kappa, ArRegime};
use crate::rng::{derive_seed, SimRng};

pub use ols::{ar1_batch_ols, ols_discrepancy_identity, IdentityCheck};
pub use rate::{estimate_rate, CheckpointSummary, RateReport, MIN_CHECKPOINTS, MIN_REPS};
pub use stats::{fit_line, median, quantile_sorted, LineFit, Quartiles};

/// Default horizon limit in the explosive AR regime, where `κ_t` grows like
/// `θ^{2t}`.
pub const EXPLOSIVE_T_CAP: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("replication {rep}: {source}")]
    Replication { rep: usize, source: EngineError },
}

/// Normalizing sequence `a_t` of the rate statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AChoice {
    /// `a_t = t`.
    #[default]
    StepCount,
    /// `a_t` = the scheme's accumulated statistic (`trace/m`): `t` for i.i.d.
    /// schemes, `H_t` for additive families.
    Information,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub reps: usize,
    pub t_max: usize,
    /// Strictly increasing step indices in `1..=t_max`.
    pub checkpoints: Vec<usize>,
    pub master_seed: u64,
    pub theta_true: ParamVec<f64>,
    pub theta0: ParamVec<f64>,
    /// Rate exponent in `(0, ½)`.
    pub delta: f64,
    pub a_choice: AChoice,
    /// Record the Fisher-information ratio `I_t/t` or `I_t/κ_t(θ)` (scalar AR
    /// models, where `I_t` is the accumulated statistic).
    pub fisher_ratio: bool,
    /// Horizon limit when `fisher_ratio` is set and `|θ| > 1`.
    pub explosive_t_cap: usize,
    /// Worker threads; `None` uses rayon's global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl MonteCarloConfig {
    pub fn new(theta_true: ParamVec<f64>, theta0: ParamVec<f64>) -> Self {
        Self {
            reps: 500,
            t_max: 10_000,
            checkpoints: log_checkpoints(2.0, 4.0, 5),
            master_seed: 0,
            theta_true,
            theta0,
            delta: 0.4,
            a_choice: AChoice::StepCount,
            fisher_ratio: false,
            explosive_t_cap: EXPLOSIVE_T_CAP,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.t_max == 0 {
            return bad("t_max must be at least 1".into());
        }
        if self.checkpoints.is_empty() {
            return bad("at least one checkpoint is required".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be strictly increasing".into());
        }
        if self.checkpoints[0] == 0 || *self.checkpoints.last().unwrap() > self.t_max {
            return bad(format!("checkpoints must lie in 1..={}", self.t_max));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad(format!("delta must lie in (0, 1/2), got {}", self.delta));
        }
        if self.theta_true.dim() != self.theta0.dim() {
            return bad("theta_true and theta0 differ in dimension".into());
        }
        if !(self.theta_true.is_finite() && self.theta0.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if self.fisher_ratio {
            if self.theta_true.dim() != 1 {
                return bad("the Fisher ratio needs a scalar parameter".into());
            }
            let regime = ArRegime::of(self.theta_true.first());
            if regime == ArRegime::Explosive && self.t_max > self.explosive_t_cap {
                return bad(format!(
                    "explosive regime limited to t_max <= {}",
                    self.explosive_t_cap
                ));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// `n` checkpoints `round(10^e)` with `e` evenly spaced on `[lo, hi]`.
pub fn log_checkpoints(lo: f64, hi: f64, n: usize) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let e = if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            };
            10f64.powf(e).round() as usize
        })
        .collect()
}

/// State of one replication at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointRecord {
    pub t: usize,
    /// `‖θ̂_t − θ‖`.
    pub delta_abs: f64,
    pub a_t: f64,
    /// `a_t^δ ‖Δ_t‖`.
    pub scaled: f64,
    /// `ln` of the accumulated statistic (`ln I_t` for AR models).
    pub log_info: f64,
    pub stalled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub rep: usize,
    pub seed: u64,
    pub points: Vec<CheckpointRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub config: MonteCarloConfig,
    /// Ordered by replication index.
    pub runs: Vec<Replication>,
}

/// Fisher ratio at step `t` from `ln I_t`: `I_t/t` when `|θ| < 1`, otherwise
/// `exp(ln I_t − ln κ_t(θ))`.
pub fn fisher_ratio(theta: f64, t: usize, log_info: f64) -> f64 {
    match ArRegime::of(theta) {
        ArRegime::Ergodic => (log_info - (t as f64).ln()).exp(),
        _ => (log_info - log_fisher_rate_kappa(theta, t)).exp(),
    }
}

/// One raw checkpoint row for CSV export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawRow {
    pub rep: usize,
    pub t: usize,
    pub delta_abs: f64,
    pub scaled: f64,
    pub ratio: Option<f64>,
}

impl Ensemble {
    pub fn checkpoints(&self) -> &[usize] {
        &self.config.checkpoints
    }

    /// Values of `f` at checkpoint index `k` across replications.
    pub fn column(&self, k: usize, f: impl Fn(&CheckpointRecord) -> f64) -> Vec<f64> {
        self.runs.iter().map(|r| f(&r.points[k])).collect()
    }

    /// Per-replication Fisher ratios at each checkpoint, if recorded.
    pub fn ratios(&self) -> Option<Vec<Vec<f64>>> {
        if !self.config.fisher_ratio {
            return None;
        }
        let theta = self.config.theta_true.first();
        Some(
            self.runs
                .iter()
                .map(|r| {
                    r.points
                        .iter()
                        .map(|p| fisher_ratio(theta, p.t, p.log_info))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn raw_rows(&self) -> Vec<RawRow> {
        let theta = self.config.theta_true.first();
        let ratio = self.config.fisher_ratio;
        self.runs
            .iter()
            .flat_map(|r| {
                r.points.iter().map(move |p| RawRow {
                    rep: r.rep,
                    t: p.t,
                    delta_abs: p.delta_abs,
                    scaled: p.scaled,
                    ratio: ratio.then(|| fisher_ratio(theta, p.t, p.log_info)),
                })
            })
            .collect()
    }
}

/// Runs replication `rep` of the experiment.
pub fn replicate<S: EstimatingScheme<f64> + ?Sized>(
    scheme: &S,
    cfg: &MonteCarloConfig,
    rep: usize,
) -> Result<Replication, HarnessError> {
    let seed = derive_seed(cfg.master_seed, rep as u64);
    let mut rng = SimRng::new(seed);
    let mut est = Estimator::with_capacity(scheme, cfg.theta0, cfg.t_max);
    let dim = scheme.dim() as f64;
    let mut points = Vec::with_capacity(cfg.checkpoints.len());
    let mut next = cfg.checkpoints.iter().peekable();
    for t in 1..=cfg.t_max {
        let record = est
            .advance(&cfg.theta_true, &mut rng)
            .map_err(|source| HarnessError::Replication { rep, source })?;
        if next.peek() != Some(&&t) {
            continue;
        }
        next.next();
        let state = est.state();
        let info = state.normalizer_acc.trace() / dim;
        let a_t = match cfg.a_choice {
            AChoice::StepCount => t as f64,
            AChoice::Information => info,
        };
        let delta_abs = (record.theta_hat - cfg.theta_true).norm();
        points.push(CheckpointRecord {
            t,
            delta_abs,
            a_t,
            scaled: a_t.powf(cfg.delta) * delta_abs,
            log_info: info.ln(),
            stalled: state.stalled,
        });
        if next.peek().is_none() {
            break;
        }
    }
    Ok(Replication { rep, seed, points })
}

/// Runs all replications, in parallel when more than one thread is
/// available. The result does not depend on the thread count.
pub fn run_monte_carlo<S: EstimatingScheme<f64> + ?Sized>(
    scheme: &S,
    cfg: &MonteCarloConfig,
) -> Result<Ensemble, HarnessError> {
    cfg.validate()?;
    if scheme.dim() != cfg.theta_true.dim() {
        return Err(HarnessError::InvalidConfig(format!(
            "scheme dimension {} does not match parameter dimension {}",
            scheme.dim(),
            cfg.theta_true.dim()
        )));
    }
    let work = || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| replicate(scheme, cfg, rep))
            .collect::<Result<Vec<_>, _>>()
    };
    let runs = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(Ensemble {
        config: cfg.clone(),
        runs,
    })
}

/// Median Fisher ratio per checkpoint: `I_t/t` for `|θ| < 1`, `I_t/κ_t(θ)`
/// (formed in log space) otherwise.
pub fn ergodic_ratio_series(ensemble: &Ensemble, theta: f64) -> Vec<(usize, f64)> {
    ensemble
        .checkpoints()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let vals = ensemble.column(k, |p| fisher_ratio(theta, p.t, p.log_info));
            (t, median(&vals))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_trajectory;
    use crate::models::{gaussian_ar1, CauchyLocation};

    fn cauchy_cfg() -> MonteCarloConfig {
        let mut cfg = MonteCarloConfig::new(ParamVec::scalar(1.0), ParamVec::scalar(0.0));
        cfg.reps = 8;
        cfg.t_max = 300;
        cfg.checkpoints = vec![10, 100, 300];
        cfg.master_seed = 99;
        cfg
    }

    #[test]
    fn log_checkpoint_values() {
        assert_eq!(
            log_checkpoints(2.0, 4.0, 5),
            vec![100, 316, 1000, 3162, 10000]
        );
    }

    #[test]
    fn validation() {
        let ok = cauchy_cfg();
        assert!(ok.validate().is_ok());
        for mutate in [
            (|c: &mut MonteCarloConfig| c.reps = 0) as fn(&mut MonteCarloConfig),
            |c| c.delta = 0.6,
            |c| c.delta = 0.0,
            |c| c.checkpoints = vec![10, 10],
            |c| c.checkpoints = vec![400],
            |c| c.checkpoints = vec![],
            |c| c.threads = Some(0),
        ] {
            let mut c = ok.clone();
            mutate(&mut c);
            assert!(c.validate().is_err());
        }
        let mut explosive = ok.clone();
        explosive.theta_true = ParamVec::scalar(1.2);
        explosive.fisher_ratio = true;
        explosive.t_max = 600;
        explosive.checkpoints = vec![600];
        assert!(explosive.validate().is_err());
    }

    #[test]
    fn single_rep_matches_trajectory() {
        let scheme = CauchyLocation.scheme::<f64>();
        let mut cfg = cauchy_cfg();
        cfg.reps = 1;
        let ens = run_monte_carlo(&scheme, &cfg).unwrap();
        let seed = derive_seed(99, 0);
        assert_eq!(ens.runs[0].seed, seed);
        let recs = run_trajectory(&scheme, &cfg.theta_true, &cfg.theta0, 300, seed).unwrap();
        for p in &ens.runs[0].points {
            let d = (recs[p.t - 1].theta_hat.first() - 1.0).abs();
            assert_eq!(p.delta_abs, d);
            assert_eq!(p.scaled, (p.t as f64).powf(0.4) * d);
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let scheme = CauchyLocation.scheme::<f64>();
        let mut a = cauchy_cfg();
        a.threads = Some(1);
        let mut b = cauchy_cfg();
        b.threads = Some(4);
        let ea = run_monte_carlo(&scheme, &a).unwrap();
        let eb = run_monte_carlo(&scheme, &b).unwrap();
        assert_eq!(ea.runs, eb.runs);
    }

    #[test]
    fn information_choice_uses_accumulator() {
        let scheme = gaussian_ar1::<f64>().scheme(0.0);
        let mut cfg = MonteCarloConfig::new(ParamVec::scalar(0.5), ParamVec::scalar(0.0));
        cfg.reps = 2;
        cfg.t_max = 50;
        cfg.checkpoints = vec![1, 50];
        cfg.a_choice = AChoice::Information;
        cfg.fisher_ratio = true;
        let ens = run_monte_carlo(&scheme, &cfg).unwrap();
        for run in &ens.runs {
            assert_eq!(run.points[0].a_t, 0.0);
            assert_eq!(run.points[0].stalled, 1);
            let recs = run_trajectory(&scheme, &cfg.theta_true, &cfg.theta0, 50, run.seed).unwrap();
            let h: f64 = recs[..49].iter().map(|r| r.x * r.x).sum();
            assert!((run.points[1].a_t - h).abs() <= 1e-12 * h);
        }
        let ratios = ens.ratios().unwrap();
        assert!((ratios[0][1] - ens.runs[0].points[1].a_t / 50.0).abs() < 1e-12);
    }

    #[test]
    fn explosive_ratio_in_log_space() {
        let theta = 1.2;
        let t = 300;
        let log_info = log_fisher_rate_kappa(theta, t) + 0.5f64.ln();
        assert!((fisher_ratio(theta, t, log_info) - 0.5).abs() < 1e-12);
        assert!((fisher_ratio(0.5, 100, (200.0f64).ln()) - 2.0).abs() < 1e-12);
    }
}
