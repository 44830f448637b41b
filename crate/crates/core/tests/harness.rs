use recest::harness::{
    estimate_rate, ols_discrepancy_identity, replicate, run_monte_carlo, AChoice, HarnessError,
    MonteCarloConfig,
};
use recest::models::{gaussian_ar1, CauchyLocation};
use recest::{derive_seed, run_trajectory, ParamVec64};

fn p(v: f64) -> ParamVec64 {
    ParamVec64::scalar(v)
}

#[test]
fn single_replication_matches_direct_run() {
    let scheme = CauchyLocation.scheme::<f64>();
    let mut cfg = MonteCarloConfig::new(p(1.0), p(0.0));
    cfg.reps = 1;
    cfg.t_max = 300;
    cfg.checkpoints = vec![10, 100, 300];
    cfg.master_seed = 99;
    let rep = replicate(&scheme, &cfg, 0).unwrap();
    let direct = run_trajectory(&scheme, &p(1.0), &p(0.0), 300, derive_seed(99, 0)).unwrap();
    for cp in &rep.points {
        let d = (direct[cp.t - 1].theta_hat.first() - 1.0).abs();
        assert_eq!(cp.delta_abs, d);
        assert_eq!(cp.scaled, (cp.t as f64).powf(0.4) * d);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let scheme = CauchyLocation.scheme::<f64>();
    let mut cfg = MonteCarloConfig::new(p(1.0), p(0.0));
    cfg.reps = 64;
    cfg.t_max = 1000;
    cfg.checkpoints = vec![10, 100, 1000];
    cfg.threads = Some(1);
    let one = run_monte_carlo(&scheme, &cfg).unwrap();
    cfg.threads = Some(4);
    let four = run_monte_carlo(&scheme, &cfg).unwrap();
    assert_eq!(one.runs, four.runs);
}

#[test]
fn cauchy_rate_slope() {
    let scheme = CauchyLocation.scheme::<f64>();
    let cfg = MonteCarloConfig::new(p(1.0), p(0.0));
    let r = estimate_rate(&run_monte_carlo(&scheme, &cfg).unwrap()).unwrap();
    assert_eq!(r.checkpoints.len(), 5);
    assert!(
        (-0.6..=-0.4).contains(&r.slope.slope),
        "slope {}",
        r.slope.slope
    );
    let first = r.checkpoints[0].scaled.q50;
    let last = r.checkpoints[4].scaled.q50;
    assert!(last < first);
}

#[test]
fn ar1_recursion_tracks_least_squares() {
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    for seed in 0..100 {
        let recs = run_trajectory(&scheme, &p(0.5), &p(0.0), 1000, seed).unwrap();
        let obs: Vec<f64> = recs.iter().map(|r| r.x).collect();
        let est: Vec<f64> = recs.iter().map(|r| r.theta_hat.first()).collect();
        let check = ols_discrepancy_identity(0.0, &obs, &est).unwrap();
        assert_eq!(check.t0, 2);
        assert!(
            check.max_rel_error < 1e-10,
            "seed {seed}: {}",
            check.max_rel_error
        );
    }
}

#[test]
fn ar1_ergodic_information_ratio() {
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    let mut cfg = MonteCarloConfig::new(p(0.5), p(0.0));
    cfg.reps = 200;
    cfg.fisher_ratio = true;
    let r = estimate_rate(&run_monte_carlo(&scheme, &cfg).unwrap()).unwrap();
    let ratio = r.checkpoints[4].ratio_median.unwrap();
    let target = 1.0 / (1.0 - 0.25);
    assert!((ratio / target - 1.0).abs() < 0.05, "median I/t = {ratio}");
    assert!((-0.6..=-0.4).contains(&r.slope.slope));
}

#[test]
fn ar1_information_normalization() {
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    let mut cfg = MonteCarloConfig::new(p(0.5), p(0.0));
    cfg.reps = 30;
    cfg.t_max = 1000;
    cfg.checkpoints = vec![100, 500, 1000];
    cfg.a_choice = AChoice::Information;
    let ens = run_monte_carlo(&scheme, &cfg).unwrap();
    for run in &ens.runs {
        let recs = run_trajectory(&scheme, &p(0.5), &p(0.0), 1000, run.seed).unwrap();
        for cp in &run.points {
            // H_t = Σ_{s≤t} X²_{s−1} with X_0 = 0.
            let h: f64 = recs[..cp.t - 1].iter().map(|r| r.x * r.x).sum();
            assert!((cp.a_t - h).abs() <= 1e-9 * h);
            assert!((cp.log_info - h.ln()).abs() < 1e-9);
            assert!((cp.scaled - cp.a_t.powf(0.4) * cp.delta_abs).abs() <= 1e-12 * cp.scaled);
        }
    }
}

#[test]
fn explosive_ratio_stabilizes() {
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    let mut cfg = MonteCarloConfig::new(p(1.2), p(0.0));
    cfg.reps = 100;
    cfg.t_max = 200;
    cfg.checkpoints = vec![150, 200];
    cfg.fisher_ratio = true;
    let ens = run_monte_carlo(&scheme, &cfg).unwrap();
    let stable = ens
        .ratios()
        .unwrap()
        .iter()
        .filter(|r| (r[1] / r[0] - 1.0).abs() < 0.01)
        .count();
    assert!(stable >= 95, "{stable}/100");
}

#[test]
fn explosive_horizon_is_capped() {
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    let mut cfg = MonteCarloConfig::new(p(1.2), p(0.0));
    cfg.fisher_ratio = true;
    assert!(matches!(
        run_monte_carlo(&scheme, &cfg),
        Err(HarnessError::InvalidConfig(_))
    ));
}
