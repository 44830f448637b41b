//! Horizon-based checks on numeric series: plateau detection for partial
//! sums, the almost-supermartingale monitor, and the `Σ Δd/d` sums for
//! non-decreasing sequences.

use serde::Serialize;

use super::DiagnosticsError;

/// Default relative growth over the last quartile below which partial sums
/// count as having plateaued.
pub const DEFAULT_PLATEAU_TOL: f64 = 0.01;

/// Default last-quartile range, relative to the running maximum, below
/// which a sequence counts as converged.
pub const DEFAULT_RANGE_TOL: f64 = 0.1;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Pairwise (cascade) sum; the result depends only on the slice contents
/// and order, not on how the work is scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let (l, r) = xs.split_at(xs.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

/// Compensated partial sums `S_1, …, S_n`.
pub fn partial_sums(terms: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::default();
    terms
        .iter()
        .map(|&x| {
            acc.add(x);
            acc.value()
        })
        .collect()
}

/// Index where the last quartile of a length-`n` series starts.
pub fn last_quartile_start(n: usize) -> usize {
    (3 * n) / 4
}

/// Growth of partial sums over their last quartile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub total: f64,
    pub tail_increase: f64,
    pub tolerance: f64,
    pub plateaued: bool,
}

/// Plateau rule: `S_n − S_{⌊3n/4⌋} ≤ tol·|S_n|`. Empty or all-zero sums plateau.
pub fn plateau(partial: &[f64], tol: f64) -> Plateau {
    let n = partial.len();
    if n == 0 {
        return Plateau {
            total: 0.0,
            tail_increase: 0.0,
            tolerance: tol,
            plateaued: true,
        };
    }
    let total = partial[n - 1];
    let q = last_quartile_start(n);
    let base = if q == 0 { 0.0 } else { partial[q - 1] };
    let tail_increase = total - base;
    Plateau {
        total,
        tail_increase,
        tolerance: tol,
        plateaued: tail_increase <= tol * total.abs(),
    }
}

/// Range of a sequence over its last quartile compared with its running
/// maximum of absolute values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRange {
    pub range: f64,
    pub running_max: f64,
    pub tolerance: f64,
    pub settled: bool,
}

pub fn tail_range(xs: &[f64], tol: f64) -> TailRange {
    let running_max = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tail = &xs[last_quartile_start(xs.len())..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = if tail.is_empty() { 0.0 } else { hi - lo };
    TailRange {
        range,
        running_max,
        tolerance: tol,
        settled: range <= tol * running_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorConfig {
    pub plateau_tol: f64,
    pub range_tol: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            plateau_tol: DEFAULT_PLATEAU_TOL,
            range_tol: DEFAULT_RANGE_TOL,
        }
    }
}

/// Empirical reading of the almost-supermartingale convergence lemma at a
/// finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupermartingaleReport {
    pub beta: Plateau,
    pub xi: Plateau,
    pub zeta: Plateau,
    pub x: TailRange,
    /// `Σβ` and `Σξ` both plateau.
    pub premise_satisfied: bool,
    /// `X` settles and `Σζ` plateaus.
    pub conclusion_holds: bool,
}

/// Tracks the premise (`Σβ`, `Σξ` finite) and conclusion (`X` converges,
/// `Σζ` finite) of the Robbins–Siegmund lemma on non-negative series.
pub fn robbins_siegmund_monitor(
    x: &[f64],
    beta: &[f64],
    xi: &[f64],
    zeta: &[f64],
    cfg: MonitorConfig,
) -> Result<SupermartingaleReport, DiagnosticsError> {
    let n = x.len();
    if beta.len() != n || xi.len() != n || zeta.len() != n {
        return Err(DiagnosticsError::InvalidInput(
            "monitor series must have equal lengths".into(),
        ));
    }
    for (name, s) in [("X", x), ("beta", beta), ("xi", xi), ("zeta", zeta)] {
        if let Some(v) = s.iter().find(|v| !(**v >= 0.0)) {
            return Err(DiagnosticsError::InvalidInput(format!(
                "{name} has negative or NaN entry {v}"
            )));
        }
    }
    let beta_p = plateau(&partial_sums(beta), cfg.plateau_tol);
    let xi_p = plateau(&partial_sums(xi), cfg.plateau_tol);
    let zeta_p = plateau(&partial_sums(zeta), cfg.plateau_tol);
    let x_r = tail_range(x, cfg.range_tol);
    Ok(SupermartingaleReport {
        premise_satisfied: beta_p.plateaued && xi_p.plateaued,
        conclusion_holds: x_r.settled && zeta_p.plateaued,
        beta: beta_p,
        xi: xi_p,
        zeta: zeta_p,
        x: x_r,
    })
}

/// Partial sums of `Δd_n/d_n` and `Δd_n/d_n^{1+ε}` for `n = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSums {
    pub sum1: Vec<f64>,
    pub sum2: Vec<f64>,
    /// `d_0^{−ε}/ε`, an upper bound for every entry of `sum2`.
    pub bound: f64,
}

/// `d` holds `d_0, d_1, …, d_N`, positive and non-decreasing.
pub fn prop_a2_sums(d: &[f64], epsilon: f64) -> Result<IncrementSums, DiagnosticsError> {
    if d.is_empty() || !(d[0] > 0.0) {
        return Err(DiagnosticsError::InvalidInput(
            "d_0 must be positive".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(DiagnosticsError::InvalidInput(
            "epsilon must be positive".into(),
        ));
    }
    if d.windows(2).any(|w| w[1] < w[0]) {
        return Err(DiagnosticsError::InvalidInput(
            "d must be non-decreasing".into(),
        ));
    }
    let (mut s1, mut s2) = (CompensatedSum::default(), CompensatedSum::default());
    let mut sum1 = Vec::with_capacity(d.len() - 1);
    let mut sum2 = Vec::with_capacity(d.len() - 1);
    for w in d.windows(2) {
        let inc = w[1] - w[0];
        s1.add(inc / w[1]);
        s2.add(inc / w[1].powf(1.0 + epsilon));
        sum1.push(s1.value());
        sum2.push(s2.value());
    }
    Ok(IncrementSums {
        sum1,
        sum2,
        bound: d[0].powf(-epsilon) / epsilon,
    })
}
