use std::f64::consts::PI;

use syzygy::dynamics::{
    detect_eclipses, integrate, integrate_from, lagrange_circular_ic, lagrange_circular_state, lagrange_homothety_ic,
    EventConfig, IntegratorConfig, Precision,
};
use twofloat::TwoFloat;
use syzygy::triangle::{angular_momentum, invariants, moment_of_inertia, squared_sides};
use syzygy::{BodyState, MassTriple, Vec2};

/// Widely published figure-eight initial data (8 significant digits).
fn eight_state() -> (BodyState, f64) {
    let x1 = Vec2::new(0.97000436, -0.24308753);
    let v3 = Vec2::new(-0.93240737, -0.86473146);
    let st = BodyState::new(0.0, [x1, -x1, Vec2::ZERO], [v3 * -0.5, v3 * -0.5, v3]);
    (st, 6.32591398)
}

fn relative_gap(a: &BodyState, b: &BodyState) -> f64 {
    let (x, y) = (a.to_array(), b.to_array());
    let num: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let den: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
    num / den
}

#[test]
fn kepler_period_with_distant_light_third_body() {
    // two unit masses on a circle of separation 1 have omega^2 = 2
    let m = MassTriple::new(1.0, 1.0, 1e-12).unwrap();
    let omega = 2f64.sqrt();
    let st = BodyState::new(
        0.0,
        [Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0), Vec2::new(0.0, 1e4)],
        [Vec2::new(0.0, -0.5 * omega), Vec2::new(0.0, 0.5 * omega), Vec2::ZERO],
    );
    let period = 2.0 * PI / omega;
    let cfg = IntegratorConfig { escape_cutoff: 1e12, collision_cutoff: 1e-8, ..Default::default() };
    let traj = integrate(&m, &st, 5.0 * period, &cfg).unwrap();
    let end = traj.final_state();
    assert!((end.pos[1] - st.pos[1]).norm() < 1e-6, "{:?}", end.pos[1]);
    assert!((end.vel[1] - st.vel[1]).norm() < 1e-6);
}

#[test]
fn lagrange_circle_keeps_moment_and_shape() {
    let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
    let st = lagrange_circular_ic(&m, 1.0).unwrap();
    let period = 2.0 * PI / (m.total()).sqrt();
    assert!(relative_gap(&st, &BodyState::from_array(0.0, &lagrange_circular_state::<f64>(&m, 1.0).unwrap())) == 0.0);
    let y0 = lagrange_circular_state::<TwoFloat>(&m, 1.0).unwrap();
    let traj = integrate_from(&m, 0.0, y0, 10.0 * period, &IntegratorConfig::default()).unwrap();
    assert!(traj.termination.is_complete());
    let i0 = invariants(&m, &st).unwrap().i;
    for s in traj.step_states() {
        let inv = invariants(&m, &s).unwrap();
        assert!(((inv.i - i0) / i0).abs() < 1e-8, "{} at {}", (inv.i - i0) / i0, s.t);
        assert!((inv.z - 1.0).abs() < 1e-6);
    }
    let (de, dj) = traj.conservation_drift().unwrap();
    assert!(de < 1e-8 && dj < 1e-8, "{de} {dj}");
    assert!(detect_eclipses(&traj, &EventConfig::default()).unwrap().is_empty());
}

#[test]
fn lagrange_circle_in_double_precision_drifts_off_the_equilateral_family() {
    // the (1,2,3) equilateral rotation is linearly unstable; f64 rounding
    // alone is amplified past order one within ten periods
    let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
    let st = lagrange_circular_ic(&m, 1.0).unwrap();
    let period = 2.0 * PI / (m.total()).sqrt();
    let cfg = IntegratorConfig { precision: Precision::Double, escape_cutoff: 1e12, ..Default::default() };
    let traj = integrate(&m, &st, 10.0 * period, &cfg).unwrap();
    let worst = traj.step_states().iter().map(|s| (invariants(&m, s).unwrap().z - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst > 1e-3, "{worst}");
}

#[test]
fn figure_eight_conserves_and_has_six_eclipses_per_period() {
    let m = MassTriple::equal();
    let (st, period) = eight_state();
    let traj = integrate(&m, &st, 3.0 * period, &IntegratorConfig::default()).unwrap();
    let (de, dj) = traj.conservation_drift().unwrap();
    assert!(de < 1e-8, "energy drift {de}");
    assert!(dj < 1e-10, "angular momentum drift {dj}");
    assert!(relative_gap(&traj.state_at(period).unwrap(), &st) < 1e-5);
    // the starting instant is itself an eclipse (body 3 at the midpoint),
    // so count over a window offset by a twelfth of the period
    let events = detect_eclipses(&traj, &EventConfig::default()).unwrap();
    let events: Vec<_> = events.into_iter().filter(|e| e.t > period / 12.0 && e.t < 2.5 * period + period / 12.0).collect();
    assert_eq!(events.len(), 15, "{events:?}");
    for e in &events {
        assert!(!e.grazing && e.z.abs() < 1e-12);
        assert!(e.direction != 0);
    }
}

#[test]
fn figure_eight_time_reversal() {
    let m = MassTriple::equal();
    let (st, period) = eight_state();
    let fwd = integrate(&m, &st, period, &IntegratorConfig::default()).unwrap();
    let end = fwd.final_state();
    let back = integrate(&m, &end, -period, &IntegratorConfig::default()).unwrap();
    let mut ret = back.final_state();
    ret.t = st.t;
    assert!(relative_gap(&ret, &st) < 1e-6);
}

#[test]
fn dense_output_matches_direct_integration() {
    let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
    let (st, _) = eight_state();
    let traj = integrate(&m, &st, 1.0, &IntegratorConfig::default()).unwrap();
    for t in [0.123, 0.5, 0.77] {
        let direct = integrate(&m, &st, t, &IntegratorConfig::default()).unwrap().final_state();
        assert!(relative_gap(&traj.state_at(t).unwrap(), &direct) < 1e-8);
    }
}

#[test]
fn homothety_keeps_equilateral_shape_until_cutoff() {
    let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
    let st = lagrange_homothety_ic(&m, 1.0, 0.0).unwrap();
    let traj = integrate(&m, &st, 10.0, &IntegratorConfig::default()).unwrap();
    assert!(traj.termination.is_collision(), "{:?}", traj.termination);
    for s in traj.step_states() {
        let inv = invariants(&m, &s).unwrap();
        assert!((inv.z - 1.0).abs() < 1e-9, "{}", inv.z);
        assert!(angular_momentum(&m, &s).abs() < 1e-12);
    }
    let last = traj.final_state();
    assert!(moment_of_inertia(&m, &squared_sides(&last.pos)) < 1e-3);
}

#[test]
fn close_approach_terminates_with_collision() {
    let m = MassTriple::equal();
    let st = BodyState::new(
        0.0,
        [Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 5.0)],
        [Vec2::ZERO; 3],
    );
    let traj = integrate(&m, &st, 100.0, &IntegratorConfig::default()).unwrap();
    assert!(traj.termination.is_collision());
    assert!(traj.require_complete().is_err());
}
