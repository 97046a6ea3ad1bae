use std::sync::Arc;

use safechain::{
    chain_bound, run_scenario, safety_lower_bound, BarrierChain, CircularObstacle, ControllerMode,
    DisturbanceProfile, Error, GainFunction, GainSchedule, IntegratorChain, NominalGains, RunError,
    Scenario,
};

fn planar(mode: ControllerMode, disturbed: bool) -> Scenario {
    Scenario {
        system: IntegratorChain::planar_double(),
        disturbance: disturbed.then(DisturbanceProfile::planar_reference),
        oracle: Arc::new(CircularObstacle {
            center: vec![2.0, 2.0],
            radius: 1.0,
        }),
        schedule: GainSchedule::new(vec![2.7, 3.0], 1.0, GainFunction::Linear, true).unwrap(),
        mu: vec![0.2, 0.2],
        include_time_partial: true,
        mode,
        nominal: NominalGains {
            kp: 4.0,
            kd: 4.0,
            higher: vec![],
        },
        x0: vec![-1.0, -1.0, 0.0, 0.0],
        goal: vec![4.0, 4.0],
        t0: 0.0,
        t_final: 10.0,
        dt: 1e-3,
        seed: 42,
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn rk4_converges_at_fourth_order() {
    let mut sc = planar(ControllerMode::Nominal, false);
    sc.t_final = 2.0;
    let finals: Vec<Vec<f64>> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            sc.dt = dt;
            run_scenario(&sc).unwrap().states.last().unwrap().clone()
        })
        .collect();
    let ratio = distance(&finals[0], &finals[1]) / distance(&finals[1], &finals[2]);
    assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn robust_filter_keeps_reference_scenario_safe() {
    let srcbf = run_scenario(&planar(ControllerMode::Srcbf, true)).unwrap();
    let sbcbf = run_scenario(&planar(ControllerMode::Sbcbf, true)).unwrap();
    let nominal = run_scenario(&planar(ControllerMode::Nominal, true)).unwrap();
    assert!(!srcbf.metrics.violation, "{:?}", srcbf.metrics);
    assert!(sbcbf.metrics.violation);
    assert!(nominal.metrics.violation);
    assert!(srcbf.metrics.min_h1 > sbcbf.metrics.min_h1);
    assert_eq!(srcbf.len(), 10_001);
    assert!(srcbf.branches.iter().all(Option::is_some));
    assert!(nominal.branches.iter().all(Option::is_none));
}

#[test]
fn runs_are_reproducible() {
    let sc = planar(ControllerMode::Srcbf, true);
    let mut short = sc.clone();
    short.t_final = 1.0;
    let a = run_scenario(&short).unwrap();
    let b = run_scenario(&short).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.disturbances, b.disturbances);
    short.seed = 43;
    let c = run_scenario(&short).unwrap();
    assert_ne!(a.disturbances, c.disturbances);
}

#[test]
fn disturbance_free_h1_stays_above_floor() {
    let sc = planar(ControllerMode::Sbcbf, false);
    let traj = run_scenario(&sc).unwrap();
    let h1_0 = traj.barrier[0][0];
    for (t, h1) in traj.times.iter().zip(traj.h1()) {
        let floor = safety_lower_bound(&GainFunction::Linear, h1_0, 2.7, 0.0, *t).unwrap();
        assert!(h1 >= 0.95 * floor, "t = {t}: {h1} < {floor}");
    }
}

#[test]
fn unsafe_start_is_rejected_before_running() {
    let mut sc = planar(ControllerMode::Srcbf, true);
    sc.x0 = vec![2.0, 2.0, 0.0, 0.0];
    match run_scenario(&sc) {
        Err(RunError::Setup(Error::UnsafeInitialization { level: 1, .. })) => {}
        other => panic!("{other:?}"),
    }
    // The nominal controller has nothing to certify.
    sc.mode = ControllerMode::Nominal;
    sc.t_final = 0.1;
    assert!(run_scenario(&sc).is_ok());
}

#[test]
fn nonfinite_state_aborts_with_partial_trajectory() {
    let mut sc = planar(ControllerMode::Nominal, false);
    sc.nominal.kp = -1e6;
    sc.dt = 0.5;
    sc.t_final = 500.0;
    match run_scenario(&sc) {
        Err(RunError::Aborted { partial, cause, .. }) => {
            assert!(!partial.is_empty());
            assert!(matches!(cause, Error::NumericalBlowup { .. }));
        }
        other => panic!("{:?}", other.map(|t| t.len())),
    }
}

#[test]
fn floors_decay_and_agree_from_zero() {
    let chain = planar(ControllerMode::Sbcbf, false)
        .barrier_chain()
        .unwrap();
    let mut last = f64::INFINITY;
    for k in 0..=50 {
        let t = 0.1 * k as f64;
        let a = safety_lower_bound(&GainFunction::Linear, 1.3, 2.7, 0.0, t).unwrap();
        let b = chain_bound(&chain, 1, 1.3, 0.0, t).unwrap();
        assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
        assert!(a > 0.0 && a <= last);
        last = a;
        // Starting later on a growing gain gives a faster decay.
        if t > 1.0 {
            let late = chain_bound(&chain, 1, 1.3, 1.0, t).unwrap();
            let early = safety_lower_bound(&GainFunction::Linear, 1.3, 2.7, 1.0, t).unwrap();
            assert!(late < early);
        }
    }
    assert!(matches!(
        safety_lower_bound(&GainFunction::Polynomial { p: 2.0 }, 1.0, 1.0, 0.0, 1.0),
        Err(Error::UnsupportedBound)
    ));
}

#[test]
fn level_gradients_match_finite_differences() {
    let schedule = GainSchedule::new(vec![1.2, 0.8, 1.0], 1.5, GainFunction::Linear, true).unwrap();
    let chain = BarrierChain::new(
        Arc::new(CircularObstacle {
            center: vec![0.5, -0.3],
            radius: 0.7,
        }),
        IntegratorChain::new(3, 2).unwrap(),
        schedule,
        vec![0.4, 0.6, 0.8],
        0.25,
    )
    .unwrap();
    let x = [1.3, 0.4, -0.2, 0.5, 0.1, -0.4];
    let t = 0.7;
    let levels = chain.evaluate(&x, t).unwrap();
    let h = 1e-5;
    for (i, level) in levels.iter().enumerate() {
        let value = |x: &[f64], t: f64| chain.eval_level(i + 1, x, t).unwrap().value;
        for j in 0..6 {
            let (mut p, mut m) = (x, x);
            p[j] += h;
            m[j] -= h;
            let fd = (value(&p, t) - value(&m, t)) / (2.0 * h);
            assert!(
                (level.gradient[j] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "h{} d{j}",
                i + 1
            );
        }
        let fd_t = (value(&x, t + h) - value(&x, t - h)) / (2.0 * h);
        assert!(
            (level.time_partial - fd_t).abs() <= 1e-6 * fd_t.abs().max(1.0),
            "h{} dt",
            i + 1
        );
    }
}
