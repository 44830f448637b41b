use recest::models::{gaussian_ar1, CauchyLocation};
use recest::{
    run_trajectory, simulate, step, EstimatingScheme, Estimator, EstimatorState, Matrix64,
    ParamVec64, SimRng,
};

fn p(v: f64) -> ParamVec64 {
    ParamVec64::scalar(v)
}

#[test]
fn cauchy_first_step() {
    let scheme = CauchyLocation.scheme::<f64>();
    let state = EstimatorState::initial(&scheme, p(0.0));
    let (next, rec) = step(&scheme, &state, 1.0, &[]).unwrap();
    assert_eq!(rec.gamma.first(), 0.5);
    assert_eq!(rec.psi.first(), 1.0);
    assert_eq!(next.theta_hat.first(), 2.0);
    assert_eq!(next.t, 1);
}

#[test]
fn ar1_second_step_is_least_squares() {
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    let mut est = Estimator::new(&scheme, p(0.0));
    let first = est.observe(0.8).unwrap();
    assert!(first.skipped);
    assert_eq!(first.theta_hat.first(), 0.0);
    assert_eq!(est.state().stalled, 1);
    let second = est.observe(1.0).unwrap();
    assert!(!second.skipped);
    assert!((second.gamma.first() - 0.64).abs() < 1e-15);
    assert!((second.psi.first() - 0.8).abs() < 1e-15);
    assert!((second.theta_hat.first() - 1.25).abs() < 1e-15);
}

#[test]
fn ar1_single_step_is_skipped() {
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    let recs = run_trajectory(&scheme, &p(0.5), &p(0.3), 1, 7).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(recs[0].skipped);
    assert_eq!(recs[0].theta_hat.first(), 0.3);
    assert_eq!(recs[0].increment.first(), 0.0);
}

#[test]
fn empty_run() {
    let scheme = CauchyLocation.scheme::<f64>();
    assert!(run_trajectory(&scheme, &p(1.0), &p(0.0), 0, 1)
        .unwrap()
        .is_empty());
}

#[test]
fn same_seed_same_bits() {
    let scheme = CauchyLocation.scheme::<f64>();
    let a = run_trajectory(&scheme, &p(1.0), &p(0.0), 500, 42).unwrap();
    let b = run_trajectory(&scheme, &p(1.0), &p(0.0), 500, 42).unwrap();
    assert_eq!(a, b);
    let c = run_trajectory(&scheme, &p(1.0), &p(0.0), 500, 43).unwrap();
    assert_ne!(a, c);
}

#[test]
fn accepted_steps_satisfy_the_update_identity() {
    for (scheme, theta) in [
        (
            Box::new(CauchyLocation.scheme::<f64>()) as Box<dyn EstimatingScheme<f64>>,
            1.0,
        ),
        (Box::new(gaussian_ar1::<f64>().scheme(0.0)), 0.5),
    ] {
        let traj = simulate(scheme.as_ref(), &p(theta), &p(0.0), 2000, 3).unwrap();
        let estimates = traj.estimates();
        for (i, r) in traj.records.iter().enumerate() {
            let prev = estimates[i];
            if r.skipped {
                assert_eq!(r.theta_hat, prev);
                continue;
            }
            assert_eq!(r.theta_hat, prev + r.increment);
            let g = r.gamma.first();
            let rhs = r.psi.first();
            let via_increment = g * r.increment.first();
            assert!(
                (via_increment - rhs).abs() <= 1e-10 * rhs.abs(),
                "t = {}",
                r.t
            );
            // The difference of consecutive estimates carries the rounding
            // of θ̂ itself, so it is compared on that scale.
            let via_difference = g * (r.theta_hat - prev).first();
            let scale = g.abs() * r.theta_hat.first().abs().max(rhs.abs() / g.abs());
            assert!(
                (via_difference - rhs).abs() <= 1e-10 * scale,
                "t = {}: {via_difference} vs {rhs}",
                r.t
            );
        }
    }
}

#[test]
fn normalizer_ignores_current_observation() {
    let ar = gaussian_ar1::<f64>().scheme(0.0);
    let cauchy = CauchyLocation.scheme::<f64>();
    let history = [0.4, -1.2, 0.7];
    let theta = p(0.35);
    for scheme in [&ar as &dyn EstimatingScheme<f64>, &cauchy] {
        let state = {
            let mut est = Estimator::new(scheme, theta);
            for &x in &history {
                est.observe(x).unwrap();
            }
            est.state().clone()
        };
        let gammas: Vec<Matrix64> = [-100.0, 0.0, 3.5, 1e6]
            .iter()
            .map(|&x| step(scheme, &state, x, &history).unwrap().1.gamma)
            .collect();
        assert!(gammas.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn history_length_is_enforced() {
    let scheme = CauchyLocation.scheme::<f64>();
    let state = EstimatorState::initial(&scheme, p(0.0));
    assert!(step(&scheme, &state, 1.0, &[2.0]).is_err());
    let wrong_dim = EstimatorState::initial(&scheme, ParamVec64::zeros(2));
    assert!(step(&scheme, &wrong_dim, 1.0, &[]).is_err());
}

#[test]
fn non_finite_update_is_reported() {
    let scheme = CauchyLocation.scheme::<f64>();
    let state = EstimatorState::initial(&scheme, p(0.0));
    let err = step(&scheme, &state, f64::NAN, &[]).unwrap_err();
    assert_eq!(err, recest::EngineError::NonFiniteUpdate { t: 1 });
}

#[test]
fn cauchy_estimates_are_consistent() {
    let scheme = CauchyLocation.scheme::<f64>();
    let close = (0..100u64)
        .filter(|&seed| {
            let recs = run_trajectory(&scheme, &p(1.0), &p(0.0), 10_000, seed).unwrap();
            (recs[9_999].theta_hat.first() - 1.0).abs() < 0.2
        })
        .count();
    assert!(close >= 95, "{close} of 100 within 0.2");
}

#[test]
fn advance_samples_with_the_accumulated_past() {
    // The sampler sees the same past that the step will use.
    let scheme = gaussian_ar1::<f64>().scheme(0.0);
    let mut rng = SimRng::new(5);
    let mut est = Estimator::new(&scheme, p(0.0));
    let mut replay = SimRng::new(5);
    let mut prev = 0.0;
    for _ in 0..20 {
        let r = est.advance(&p(0.5), &mut rng).unwrap();
        let expect = 0.5 * prev + replay.standard_normal();
        assert_eq!(r.x, expect);
        prev = r.x;
    }
}

#[test]
fn single_precision_runs() {
    let scheme = CauchyLocation.scheme::<f32>();
    let recs = run_trajectory(
        &scheme,
        &recest::ParamVec32::scalar(1.0),
        &recest::ParamVec32::scalar(0.0),
        2000,
        11,
    )
    .unwrap();
    assert!((recs[1999].theta_hat.first() - 1.0).abs() < 0.5);
}
