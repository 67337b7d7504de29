use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syzygy::dynamics::{detect_eclipses, integrate, EventConfig, IntegratorConfig};
use syzygy::eclipse::{periodic_reduce, EclipseSequence};
use syzygy::varfinder::{
    action, action_and_gradient, eight_start_phase, find_eight, max_angular_momentum, minimize, refine_to_orbit,
    LoopPath, MinimizeOptions, Symmetry,
};
use syzygy::Error;

fn random_loop(seed: u64, symmetry: Symmetry) -> LoopPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = LoopPath::eight_seed(8).unwrap();
    let base = if symmetry == Symmetry::Eight { base } else { base.time_shifted(0.0) };
    let p: Vec<f64> = base.params().iter().map(|v| v + 0.02 * rng.gen_range(-1.0..1.0)).collect();
    base.with_params(&p).unwrap()
}

fn tight() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() }
}

#[test]
fn gradient_matches_central_differences() {
    for (seed, sym) in [(1, Symmetry::Eight), (2, Symmetry::Choreography), (3, Symmetry::Choreography)] {
        let l = random_loop(seed, sym);
        let g = action_and_gradient(&l).unwrap().gradient;
        let p = l.params();
        let h = 1e-7;
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..p.len() {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (action(&l.with_params(&hi).unwrap()).unwrap() - action(&l.with_params(&lo).unwrap()).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * gnorm.max(g[i].abs()), "{sym:?} slot {i}: {fd} vs {}", g[i]);
        }
    }
}

#[test]
fn action_scales_like_kepler() {
    let l = random_loop(4, Symmetry::Eight);
    let sigma: f64 = 1.7;
    let a = action(&l).unwrap();
    let b = action(&l.rescaled(sigma)).unwrap();
    assert!((b - sigma.sqrt() * a).abs() < 1e-12 * b);
}

#[test]
fn action_invariant_under_time_shift_and_rotation() {
    let l = random_loop(5, Symmetry::Choreography);
    let a = action(&l).unwrap();
    // shifts by whole node spacings keep the quadrature nodes on the same curve points
    let spacing = l.period / l.nodes() as f64;
    for b in [action(&l.time_shifted(7.0 * spacing)).unwrap(), action(&l.rotated(0.9)).unwrap()] {
        assert!((a - b).abs() < 1e-12 * a, "{a} vs {b}");
    }
}

#[test]
fn lagrange_circle_is_nearly_critical_and_rejected_as_rotating() {
    let l = LoopPath::lagrange_circle(2.0 * std::f64::consts::PI, 8).unwrap();
    let e = action_and_gradient(&l).unwrap();
    let g = e.gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(e.action.is_finite() && g < 1e-10, "{g}");
    assert!(max_angular_momentum(&l, 16).unwrap() > 0.1);
    assert!(matches!(refine_to_orbit(&l, 0.0, 1e-5, &tight()), Err(Error::Nonreduced { .. })));
}

#[test]
fn figure_eight_pipeline() {
    let (l, report) = find_eight(24, 96, 1e-5, &MinimizeOptions::default()).unwrap();
    assert!(report.converged && report.gradient_norm < 1e-8, "{report:?}");
    assert!(report.equation_residual < 1e-5, "{report:?}");
    assert!(max_angular_momentum(&l, 64).unwrap() < 1e-8);

    // perturb and re-minimize: same action
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p: Vec<f64> = l.params().iter().map(|v| v + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
    let (_, again) = minimize(&l.with_params(&p).unwrap(), &MinimizeOptions::default()).unwrap();
    assert!((again.action - report.action).abs() < 1e-8 * report.action);

    let orbit = refine_to_orbit(&l, eight_start_phase(&l), 1e-5, &tight()).unwrap();
    assert!(orbit.mismatch < 1e-5);
    let m = l.mass_triple().unwrap();
    let zero = integrate(&m, &orbit.state, 0.0, &tight()).unwrap();
    assert_eq!(zero.final_state(), orbit.state);

    let traj = integrate(&m, &orbit.state, 3.0 * l.period, &tight()).unwrap();
    let events = detect_eclipses(&traj, &EventConfig::default()).unwrap();
    let seq = EclipseSequence::from_events(&events, false);
    assert_eq!(seq.text(), "123123123123123123");
    assert_eq!(periodic_reduce(&seq).unwrap().text(), "123123 x3");
    let sixth = l.period / 6.0;
    assert!(seq.times.windows(2).all(|w| ((w[1] - w[0]) - sixth).abs() < 0.01 * sixth));
}

#[test]
fn loop_json_round_trip_and_validation() {
    let l = random_loop(6, Symmetry::Eight);
    let text = serde_json::to_string(&l).unwrap();
    let back: LoopPath = serde_json::from_str(&text).unwrap();
    assert_eq!(back, l);
    back.validate().unwrap();
    let mut broken = back.clone();
    broken.bodies[1].x_sin[0] += 1e-6;
    assert!(broken.validate().is_err());
    assert!(serde_json::from_str::<LoopPath>(&text.replacen("\"period\"", "\"extra\":1,\"period\"", 1)).is_err());
}
