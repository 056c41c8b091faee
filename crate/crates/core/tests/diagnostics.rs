use twocharge_core::{
    circular_initial_condition, h0_field, h_field_detailed, instantaneous_accels, integrate, make_params, self_force,
    singularity_time, total_momentum, trajectory, trajectory_distance, DelayedStates, Error, ExtendedState, KernelPath,
    LevelConfig, StateVector, StopCondition, Tolerances, Trajectory, Vec3,
};

fn kinematic(accel1: Vec3) -> Trajectory {
    let p = make_params(1.0, -1, 0.5).unwrap();
    let x0 = StateVector::new(Vec3::zeros(), Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0), Vec3::zeros());
    let field = move |x: &StateVector| Ok(StateVector::new(x.v1, accel1, x.v2, Vec3::zeros()));
    let segment = integrate(&field, x0, 10.0, Tolerances::new(1e-12, 1e-12).unwrap(), StopCondition::default()).unwrap();
    Trajectory {
        params: p,
        level: 0,
        termination: segment.termination(),
        segment,
    }
}

#[test]
fn distance_of_uniformly_accelerated_pair() {
    let still = kinematic(Vec3::zeros());
    let g = 2e-3;
    let moving = kinematic(Vec3::new(0.0, g, 0.0));
    let d = trajectory_distance(&still, &moving, Some(10.0), 2000).unwrap();
    // mean of g t²/2 over [0, T]
    assert!((d.d_r1 - g * 100.0 / 6.0).abs() < 1e-6 * d.d_r1);
    assert!(d.d_r2 < 1e-12);
    let back = trajectory_distance(&moving, &still, Some(10.0), 2000).unwrap();
    assert_eq!(back.d_r1, d.d_r1);
    assert_eq!(trajectory_distance(&still, &still, None, 50).unwrap().d_r1, 0.0);
}

#[test]
fn distance_rejects_bad_requests() {
    let a = kinematic(Vec3::zeros());
    assert!(matches!(trajectory_distance(&a, &a, Some(11.0), 100), Err(Error::OutOfSpan { .. })));
    assert!(trajectory_distance(&a, &a, Some(5.0), 1).unwrap_err().is_validation());
    let p = make_params(1.0, -1, 0.5).unwrap();
    let x = circular_initial_condition(&p, 20.0).unwrap();
    let other = trajectory(0, &x, &p, &LevelConfig::new(0), StopCondition::new(0.8, 1e-3, 5.0).unwrap()).unwrap();
    assert!(trajectory_distance(&a, &other, None, 100).unwrap_err().is_validation());
}

#[test]
fn symmetric_configuration_has_no_self_force() {
    let p = make_params(1.0, -1, 0.5).unwrap();
    let x = circular_initial_condition(&p, 20.0).unwrap();
    let eval = h_field_detailed(1, &x, &p, &LevelConfig::new(1)).unwrap();
    let f = self_force(&x, &eval.delayed, &p).unwrap();
    let scale = eval.derivative.v1.norm();
    assert!(f.norm() < 1e-9 * scale, "{}", f.norm());
}

#[test]
fn momentum_changes_at_the_self_force_rate() {
    let p = make_params(2.0, -1, 0.5).unwrap();
    let x0 = StateVector::new(
        Vec3::new(-3.0, 0.5, 0.0),
        Vec3::new(0.05, -0.1, 0.0),
        Vec3::new(4.0, -1.0, 0.0),
        Vec3::new(-0.02, 0.15, 0.0),
    );
    let field = move |x: &StateVector| h0_field(x, &p);
    let seg = integrate(&field, x0, 3.0, Tolerances::new(1e-12, 1e-12).unwrap(), StopCondition::default()).unwrap();
    let t = 1.5;
    let h = 1e-3;
    let dp = (total_momentum(&seg.eval(t + h).unwrap(), &p).unwrap() - total_momentum(&seg.eval(t - h).unwrap(), &p).unwrap())
        / (2.0 * h);
    let x = seg.eval(t).unwrap();
    let acc = instantaneous_accels(&x, &p, KernelPath::Auto).unwrap();
    let delayed = DelayedStates::instantaneous(&ExtendedState::from_parts(&x, acc.a1, acc.a2), &p);
    let f = self_force(&x, &delayed, &p).unwrap();
    assert!(f.norm() > 1e-6, "test needs a visible self force");
    assert!((dp - f).norm() < 1e-5 * f.norm().max(dp.norm()), "{dp:?} vs {f:?}");
}

#[test]
fn singularity_time_of_instantaneous_run() {
    let p = make_params(1.0, -1, 0.5).unwrap();
    let x = circular_initial_condition(&p, 50.0).unwrap();
    let tr = trajectory(0, &x, &p, &LevelConfig::new(0), StopCondition::default()).unwrap();
    let at_stop = singularity_time(&tr, 0.8).unwrap();
    assert_eq!(at_stop, tr.termination.time);
    let earlier = singularity_time(&tr, 0.5).unwrap();
    assert!(earlier < at_stop);
    assert!((tr.state_at(earlier).unwrap().max_speed() - 0.5).abs() < 1e-6);
    assert!(matches!(singularity_time(&tr, 0.9), Err(Error::NotApplicable(_))));
}
