use syzygy::dynamics::{acceleration, detect_eclipses, integrate, EventConfig, IntegratorConfig};
use syzygy::theorem::{
    check_corollary, check_fzdot_monotone, check_recurrence, f_value, fzdot, ode_residual, q_terms, q_value,
    shape_kinematics, ResidualOptions,
};
use syzygy::triangle::{center_and_project, kinetic, moment_of_inertia, squared_sides};
use syzygy::{BodyState, MassTriple, Vec2};

fn eight_state() -> (BodyState, f64) {
    let x1 = Vec2::new(0.97000436, -0.24308753);
    let v3 = Vec2::new(-0.93240737, -0.86473146);
    let st = BodyState::new(0.0, [x1, -x1, Vec2::ZERO], [v3 * -0.5, v3 * -0.5, v3]);
    (st, 6.32591398)
}

fn zero_j_state(m: &MassTriple) -> BodyState {
    center_and_project(
        m,
        &BodyState::new(
            0.0,
            [Vec2::new(0.1, 0.2), Vec2::new(1.3, -0.4), Vec2::new(-0.7, 0.9)],
            [Vec2::new(0.3, -0.1), Vec2::new(-0.2, 0.5), Vec2::new(0.1, 0.05)],
        ),
    )
    .unwrap()
}

/// Advances `state` along the exact vector field by a Taylor step of order two.
fn flow(m: &MassTriple, st: &BodyState, h: f64) -> BodyState {
    let acc = acceleration(m, &st.pos).unwrap();
    let pos = std::array::from_fn(|k| st.pos[k] + st.vel[k] * h + acc[k] * (0.5 * h * h));
    let vel = std::array::from_fn(|k| st.vel[k] + acc[k] * h);
    BodyState::new(st.t + h, pos, vel)
}

#[test]
fn oscillation_equation_holds_pointwise() {
    // d/dt(f z') along the vector field, by central differences of a Taylor
    // flow (error O(h^2)), against -q z from the closed-form coefficients
    for m in [MassTriple::equal(), MassTriple::new(1.0, 2.0, 3.0).unwrap(), MassTriple::new(0.2, 5.0, 1.1).unwrap()] {
        let st = zero_j_state(&m);
        let lhs = |h: f64| (fzdot(&m, &flow(&m, &st, h)).unwrap() - fzdot(&m, &flow(&m, &st, -h)).unwrap()) / (2.0 * h);
        let (a, b) = (lhs(1e-3), lhs(5e-4));
        let deriv = (4.0 * b - a) / 3.0;
        let z = shape_kinematics(&m, &st).unwrap().z;
        let rhs = -q_value(&m, &st).unwrap() * z;
        assert!((deriv - rhs).abs() < 1e-6 * rhs.abs().max(1.0), "{m:?}: {deriv} vs {rhs}");
    }
}

#[test]
fn kinetic_energy_splits_into_radial_and_shape_parts() {
    // zero angular momentum: K = I'^2/(4I) + (I/4) lambda |u'|^2
    let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
    let st = zero_j_state(&m);
    let i = moment_of_inertia(&m, &squared_sides(&st.pos));
    let idot = syzygy::shape::idot(&m, &st);
    let t = q_terms(&m, &st).unwrap();
    let split = idot * idot / (4.0 * i) + 0.25 * i * t.lambda * t.k_round;
    let k = kinetic(&m, &st);
    assert!((split - k).abs() < 1e-12 * k, "{split} vs {k}");
}

#[test]
fn q_is_even_under_reflection_and_f_is_invariant() {
    let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
    let st = zero_j_state(&m);
    let flip = |v: Vec2| Vec2::new(v.x, -v.y);
    let mirror = BodyState::new(0.0, st.pos.map(flip), st.vel.map(flip));
    let (q, qm) = (q_value(&m, &st).unwrap(), q_value(&m, &mirror).unwrap());
    assert!((q - qm).abs() < 1e-12 * q.abs().max(1.0));
    assert!((f_value(&m, &st).unwrap() - f_value(&m, &mirror).unwrap()).abs() < 1e-14);
}

#[test]
fn figure_eight_satisfies_the_oscillation_equation() {
    let m = MassTriple::equal();
    let (st, period) = eight_state();
    let traj = integrate(&m, &st, 3.0 * period, &IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() })
        .unwrap();
    let report = ode_residual(&traj, &ResidualOptions::default()).unwrap();
    eprintln!("{report:?}");
    assert!(report.tolerance_pass, "{report:?}");
    let wrong = ode_residual(&traj, &ResidualOptions { negate_q: true, ..Default::default() }).unwrap();
    assert!(wrong.max_residual > 0.5, "{wrong:?}");

    let events = detect_eclipses(&traj, &EventConfig::default()).unwrap();
    assert!(check_fzdot_monotone(&traj, &events, 1e-9).unwrap().pass);
    let cor = check_corollary(&traj, &events).unwrap();
    assert!(cor.pass, "{cor:?}");
    let rec = check_recurrence(&traj, &events).unwrap();
    eprintln!("{rec:?}");
    assert!(rec.pass, "{rec:?}");
}
