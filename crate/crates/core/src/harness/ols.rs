use serde::Serialize;

/// Batch least-squares estimates `θ*_t = Σ_{s≤t} X_s X_{s−1} / Σ_{s≤t} X²_{s−1}`
/// for `t = 1..=n`; `None` while the denominator is zero.
pub fn ar1_batch_ols(x0: f64, observations: &[f64]) -> Vec<Option<f64>> {
    let (mut num, mut den) = (0.0, 0.0);
    let mut prev = x0;
    observations
        .iter()
        .map(|&x| {
            num += x * prev;
            den += prev * prev;
            prev = x;
            (den > 0.0).then(|| num / den)
        })
        .collect()
}

/// Outcome of checking `θ̂_t − θ*_t = (I_{t₀}/I_t)(θ̂_{t₀} − θ*_{t₀})` for
/// all `t ≥ t₀`, where `t₀` is the first step with `I_t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub t0: usize,
    /// Largest `|lhs − rhs| / max(|θ̂_t|, |θ*_t|)`.
    pub max_rel_error: f64,
    /// `θ̂_{t₀} − θ*_{t₀}`.
    pub initial_discrepancy: f64,
}

/// `estimates` holds `θ̂_1..θ̂_n` of the least-squares recursion on
/// `observations` (with `X_0 = x0`). Returns `None` if `I_t` never becomes
/// positive.
pub fn ols_discrepancy_identity(
    x0: f64,
    observations: &[f64],
    estimates: &[f64],
) -> Option<IdentityCheck> {
    assert_eq!(observations.len(), estimates.len());
    let batch = ar1_batch_ols(x0, observations);
    let mut info = Vec::with_capacity(observations.len());
    let mut acc = 0.0;
    let mut prev = x0;
    for &x in observations {
        acc += prev * prev;
        info.push(acc);
        prev = x;
    }
    let i0 = batch.iter().position(Option::is_some)?;
    let d0 = estimates[i0] - batch[i0]?;
    let mut worst: f64 = 0.0;
    for i in i0..observations.len() {
        let star = batch[i]?;
        let lhs = estimates[i] - star;
        let rhs = info[i0] / info[i] * d0;
        let scale = estimates[i].abs().max(star.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Some(IdentityCheck {
        t0: i0 + 1,
        max_rel_error: worst,
        initial_discrepancy: d0,
    })
}
