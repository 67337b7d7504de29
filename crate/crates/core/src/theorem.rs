//! Checks of the oscillation equation `d/dt (f z') = -q z` satisfied by the
//! normalized area `z` on zero angular momentum solutions, of its
//! coefficients `f = I lambda` and `q`, and of its consequences: `f z'` is
//! monotone while `z` keeps a sign, `z` has one critical point between
//! eclipses, and bounded runs keep eclipsing.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{detect_eclipses, EventConfig, Trajectory};
use crate::eclipse::EclipseEvent;
use crate::error::{Error, Result};
use crate::shape::{
    self, cot_dlog_lambda_dphi, cot_du_dphi, dlog_lambda_dphi, du_dphi, ineq1_closed_form, lambda, realize,
    ConeVector, ShapePoint,
};
use crate::triangle::{
    angular_momentum, center_and_project, jacobi_inverse, jacobi_map, kinetic, moment_of_inertia, squared_sides,
    unit_moment, BodyState, JacobiPair, MassTriple,
};

/// Default bound on `|J| / sqrt(I K)` for a state to count as reduced.
pub const J_TOL_REL: f64 = 1e-8;

/// Error unless `|J| <= tol_rel * sqrt(I K)`.
pub fn check_reduced(m: &MassTriple, state: &BodyState, tol_rel: f64) -> Result<()> {
    let j = angular_momentum(m, state);
    let i = moment_of_inertia(m, &squared_sides(&state.pos));
    let tol = tol_rel * (i * kinetic(m, state)).sqrt();
    if j.abs() > tol {
        return Err(Error::Nonreduced { j, tol });
    }
    Ok(())
}

/// `f = 3 c(m) I1^2 / I`, equal to `I lambda`.
pub fn f_value(m: &MassTriple, state: &BodyState) -> Result<f64> {
    let s = squared_sides(&state.pos);
    let i = moment_of_inertia(m, &s);
    if !(i > 0.0) {
        return Err(Error::Degenerate("triple collision: I = 0".into()));
    }
    let i1 = unit_moment(&s);
    Ok(3.0 * m.c() * i1 * i1 / i)
}

/// Shape-sphere position and rates of a phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeKinematics {
    pub point: ShapePoint,
    pub cos_phi: f64,
    pub z: f64,
    pub zdot: f64,
    /// `phi'^2 + cos^2(phi) theta'^2`, the squared speed on the unit sphere.
    pub k_round: f64,
}

pub fn shape_kinematics(m: &MassTriple, state: &BodyState) -> Result<ShapeKinematics> {
    let sc = shape::to_shape(m, state)?;
    let eq = MassTriple::equal();
    let z = jacobi_map(&eq, state);
    let zdot = crate::triangle::jacobi_velocity(&eq, state);
    let w = ConeVector::from_jacobi(&z).as_array();
    let wd = ConeVector::rate(&z, &zdot).as_array();
    let k_round: f64 = (1..4).map(|a| ((wd[a] * w[0] - w[a] * wd[0]) / (w[0] * w[0])).powi(2)).sum();
    let s = squared_sides(&state.pos);
    Ok(ShapeKinematics {
        point: sc.point,
        cos_phi: sc.cos_phi,
        z: crate::triangle::normalized_area(crate::triangle::signed_area(&state.pos), unit_moment(&s)),
        zdot: shape::normalized_area_rate(state),
        k_round,
    })
}

/// The two summands of `q` and related quantities at one phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QTerms {
    /// `1 - (1/2) cot(phi) dlog(lambda)/dphi`.
    pub kinetic_factor: f64,
    /// `kinetic_factor * I * lambda * k_round`.
    pub kinetic: f64,
    /// `-4 cot(phi) dU/dphi`.
    pub potential: f64,
    pub q: f64,
    /// Variant with kinetic factor `I k_round` (no `lambda`), for comparison.
    pub q_without_lambda: f64,
    pub k_round: f64,
    pub lambda: f64,
    /// Magnitude against which the signs of the summands are judged.
    pub scale: f64,
}

/// `q` and its summands; fails with `Nonreduced` unless `J` vanishes.
pub fn q_terms(m: &MassTriple, state: &BodyState) -> Result<QTerms> {
    check_reduced(m, state, J_TOL_REL)?;
    q_terms_unchecked(m, state)
}

pub fn q_value(m: &MassTriple, state: &BodyState) -> Result<f64> {
    q_terms(m, state).map(|t| t.q)
}

fn q_terms_unchecked(m: &MassTriple, state: &BodyState) -> Result<QTerms> {
    let kin = shape_kinematics(m, state)?;
    let p = kin.point;
    let lam = lambda(m, &p);
    let kinetic_factor = 1.0 - 0.5 * cot_dlog_lambda_dphi(m, &p);
    let kinetic = kinetic_factor * p.i * lam * kin.k_round;
    let potential = -4.0 * cot_du_dphi(m, &p)?;
    Ok(QTerms {
        kinetic_factor,
        kinetic,
        potential,
        q: kinetic + potential,
        q_without_lambda: kinetic_factor * p.i * kin.k_round + potential,
        k_round: kin.k_round,
        lambda: lam,
        scale: p.i * lam * kin.k_round + potential.abs(),
    })
}

/// `f z'` at a phase point.
pub fn fzdot(m: &MassTriple, state: &BodyState) -> Result<f64> {
    Ok(f_value(m, state)? * shape::normalized_area_rate(state))
}

/// Shortest two-body time scale `min r_ij^{3/2} / sqrt(m_i + m_j)`.
pub fn local_time_scale(m: &MassTriple, state: &BodyState) -> f64 {
    let s = squared_sides(&state.pos);
    let ms = m.masses();
    (0..3).map(|k| s[k].powf(0.75) / (ms[(k + 1) % 3] + ms[(k + 2) % 3]).sqrt()).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualOptions {
    /// Difference steps, as fractions of the local time scale, to try.
    pub etas: Vec<f64>,
    pub samples_per_step: usize,
    pub tolerance: f64,
    /// Flip the sign of `q` (a deliberately wrong equation).
    pub negate_q: bool,
    pub events: EventConfig,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            etas: vec![0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001],
            samples_per_step: 4,
            tolerance: 1e-6,
            negate_q: false,
            events: EventConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub eta: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub argmax_t: f64,
    /// Smallest difference step used at the chosen `eta`.
    pub h_used: f64,
    pub tolerance_pass: bool,
    pub eta: f64,
    pub max_abs_residual: f64,
    /// Largest `I / tau^2` over the samples: the natural size of `d/dt(f z')`.
    pub natural_scale: f64,
    pub samples: usize,
    pub ladder: Vec<LadderRung>,
}

struct ResidualSample {
    t: f64,
    deriv: f64,
    qz: f64,
    arc: usize,
}

/// Largest relative residual of `d/dt(f z') + q z` along `traj`, with the
/// derivative taken by five-point central differences of the dense output.
///
/// Each residual is divided by the largest `|d/dt(f z')|` or `|q z|` on its
/// arc between consecutive eclipses (both sides vanish at the eclipses), with
/// a floor of `1e-12 max |f z'| / tau`.
pub fn ode_residual(traj: &Trajectory, opts: &ResidualOptions) -> Result<ResidualReport> {
    let m = traj.masses;
    check_reduced(&m, &traj.initial, J_TOL_REL)?;
    if opts.etas.is_empty() {
        return Err(Error::Invalid("no difference steps requested".into()));
    }
    let (t_lo, t_hi) = (traj.t_start(), traj.t_end());
    let eclipses: Vec<f64> = detect_eclipses(traj, &opts.events)?.iter().filter(|e| !e.grazing).map(|e| e.t).collect();
    let n = opts.samples_per_step.max(1);
    let times: Vec<f64> = traj
        .segments
        .iter()
        .flat_map(|s| (0..n).map(move |j| s.t0 + s.h * j as f64 / n as f64))
        .collect();
    let g_at = |t: f64| -> Result<f64> { fzdot(&m, &traj.state_at(t)?) };
    let sign = if opts.negate_q { -1.0 } else { 1.0 };

    // per-time data independent of the step
    let mut base = Vec::with_capacity(times.len());
    let mut g_over_tau: f64 = 0.0;
    let mut natural_scale: f64 = 0.0;
    for &t in &times {
        let st = traj.state_at(t)?;
        let tau = local_time_scale(&m, &st);
        let qt = q_terms_unchecked(&m, &st)?;
        let z = shape::to_shape(&m, &st)?.point.phi.sin();
        let g = fzdot(&m, &st)?;
        g_over_tau = g_over_tau.max(g.abs() / tau);
        natural_scale = natural_scale.max(qt.lambda * moment_of_inertia(&m, &squared_sides(&st.pos)) / (tau * tau));
        base.push((t, tau, sign * qt.q * z));
    }
    let floor = (1e-12 * g_over_tau).max(f64::MIN_POSITIVE);
    let arc_of = |t: f64| eclipses.partition_point(|&e| e < t);

    let mut ladder = Vec::new();
    let mut best: Option<(f64, ResidualReport)> = None;
    for &eta in &opts.etas {
        let mut samples = Vec::new();
        let mut h_min = f64::INFINITY;
        for &(t, tau, qz) in &base {
            let h = eta * tau;
            if t - 2.0 * h < t_lo || t + 2.0 * h > t_hi {
                continue;
            }
            h_min = h_min.min(h);
            let deriv = (g_at(t - 2.0 * h)? - 8.0 * g_at(t - h)? + 8.0 * g_at(t + h)? - g_at(t + 2.0 * h)?) / (12.0 * h);
            samples.push(ResidualSample { t, deriv, qz, arc: arc_of(t) });
        }
        if samples.is_empty() {
            continue;
        }
        let arcs = eclipses.len() + 1;
        let mut arc_scale = vec![0.0f64; arcs];
        for s in &samples {
            arc_scale[s.arc] = arc_scale[s.arc].max(s.deriv.abs()).max(s.qz.abs());
        }
        let (mut worst, mut argmax, mut worst_abs) = (0.0f64, t_lo, 0.0f64);
        for s in &samples {
            let r = (s.deriv + s.qz).abs();
            let rel = r / arc_scale[s.arc].max(floor);
            worst_abs = worst_abs.max(r);
            if rel > worst {
                worst = rel;
                argmax = s.t;
            }
        }
        ladder.push(LadderRung { eta, max_residual: worst });
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((
                worst,
                ResidualReport {
                    max_residual: worst,
                    argmax_t: argmax,
                    h_used: h_min,
                    tolerance_pass: worst < opts.tolerance,
                    eta,
                    max_abs_residual: worst_abs,
                    natural_scale,
                    samples: samples.len(),
                    ladder: Vec::new(),
                },
            ));
        }
    }
    let (_, mut report) = best.ok_or_else(|| Error::Invalid("trajectory too short for the difference stencil".into()))?;
    report.ladder = ladder;
    Ok(report)
}

/// One grid cell of an inequality scan (unit moment of inertia).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub phi: f64,
    pub theta: f64,
    pub lambda: f64,
    #[serde(rename = "dUdphi")]
    pub du_dphi: f64,
    pub dloglambda_dphi: f64,
    /// `1 - (1/2) cot(phi) dlog(lambda)/dphi` from the derivatives.
    pub ineq1: f64,
    /// `-cot(phi) dU/dphi`.
    pub ineq2: f64,
    pub q_kinetic_factor: f64,
    pub q_potential_term: f64,
    #[serde(skip)]
    pub ineq1_closed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanExtremum {
    pub value: f64,
    pub phi: f64,
    pub theta: f64,
}

impl ScanExtremum {
    fn none() -> Self {
        Self { value: f64::INFINITY, phi: f64::NAN, theta: f64::NAN }
    }

    fn take_min(self, other: Self) -> Self {
        if other.value < self.value {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySummary {
    pub masses: [f64; 3],
    pub grid: usize,
    pub min_ineq1: ScanExtremum,
    pub min_ineq2: ScanExtremum,
    /// Largest `|ineq1 - closed form|` over the grid.
    pub max_closed_form_deviation: f64,
    /// Smallest `-cot(phi) dU/dphi` on the equator (smooth limit).
    pub min_ineq2_equator: ScanExtremum,
    /// Smallest `-cot(phi) dU/dphi` next to the pole.
    pub min_ineq2_pole: ScanExtremum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityScan {
    pub rows: Vec<ScanRow>,
    pub summary: InequalitySummary,
}

/// Cell-centered grid: `n` latitudes in `(0, pi/2)` and `n` longitudes.
pub fn scan_grid(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let phi = (i as f64 + 0.5) * FRAC_PI_2 / n as f64;
        for j in 0..n {
            out.push((phi, -PI + (j as f64 + 0.5) * 2.0 * PI / n as f64));
        }
    }
    out
}

fn scan_row(m: &MassTriple, phi: f64, theta: f64) -> Result<ScanRow> {
    let p = ShapePoint::unit(phi, theta);
    let cot = phi.cos() / phi.sin();
    let dlog = dlog_lambda_dphi(m, &p);
    let du = du_dphi(m, &p)?;
    Ok(ScanRow {
        phi,
        theta,
        lambda: lambda(m, &p),
        du_dphi: du,
        dloglambda_dphi: dlog,
        ineq1: 1.0 - 0.5 * cot * dlog,
        ineq2: -cot * du,
        q_kinetic_factor: 1.0 - 0.5 * cot_dlog_lambda_dphi(m, &p),
        q_potential_term: -4.0 * cot_du_dphi(m, &p)?,
        ineq1_closed: ineq1_closed_form(m, phi, theta),
    })
}

/// Both inequalities on an `n x n` grid over the upper hemisphere.
pub fn scan_inequalities(m: &MassTriple, n: usize) -> Result<InequalityScan> {
    if n == 0 {
        return Err(Error::Invalid("grid size must be positive".into()));
    }
    let rows = scan_grid(n).into_par_iter().map(|(phi, theta)| scan_row(m, phi, theta)).collect::<Result<Vec<_>>>()?;
    let mut min1 = ScanExtremum::none();
    let mut min2 = ScanExtremum::none();
    let mut dev: f64 = 0.0;
    for r in &rows {
        min1 = min1.take_min(ScanExtremum { value: r.ineq1, phi: r.phi, theta: r.theta });
        min2 = min2.take_min(ScanExtremum { value: r.ineq2, phi: r.phi, theta: r.theta });
        dev = dev.max((r.ineq1 - r.ineq1_closed).abs());
    }
    let mut eq_min = ScanExtremum::none();
    let mut pole_min = ScanExtremum::none();
    for j in 0..n {
        let theta = -PI + (j as f64 + 0.5) * 2.0 * PI / n as f64;
        let at_equator = -cot_du_dphi(m, &ShapePoint::unit(0.0, theta))?;
        eq_min = eq_min.take_min(ScanExtremum { value: at_equator, phi: 0.0, theta });
        let near_pole = FRAC_PI_2 - 1e-9;
        let at_pole = -cot_du_dphi(m, &ShapePoint::unit(near_pole, theta))?;
        pole_min = pole_min.take_min(ScanExtremum { value: at_pole, phi: near_pole, theta });
    }
    Ok(InequalityScan {
        rows,
        summary: InequalitySummary {
            masses: m.masses(),
            grid: n,
            min_ineq1: min1,
            min_ineq2: min2,
            max_closed_form_deviation: dev,
            min_ineq2_equator: eq_min,
            min_ineq2_pole: pole_min,
        },
    })
}

/// A zero angular momentum state with shape `(phi, theta)`, `I = 1`, and unit
/// shape-sphere speed in direction `alpha`.
///
/// In equal-mass Jacobi coordinates the velocity `e^{i alpha} (-conj z2, conj z1)`
/// is orthogonal to dilation and rotation, so it only moves the shape; the
/// mass-`m` rotation component is then projected out.
pub fn shape_velocity_state(m: &MassTriple, phi: f64, theta: f64, alpha: f64) -> Result<BodyState> {
    let eq = MassTriple::equal();
    let st = realize(m, &ShapePoint::unit(phi, theta))?;
    let z = jacobi_map(&eq, &st);
    let rot = Complex64::from_polar(1.0, alpha);
    let dz = JacobiPair { z1: -rot * z.z2.conj(), z2: rot * z.z1.conj() };
    let vel = jacobi_inverse(&eq, &dz);
    let st = center_and_project(m, &BodyState::new(0.0, st.pos, vel))?;
    let speed = shape_kinematics(m, &st)?.k_round.sqrt();
    if !(speed > 0.0) {
        return Err(Error::Degenerate(format!("no shape motion at ({phi}, {theta})")));
    }
    Ok(BodyState::new(0.0, st.pos, st.vel.map(|v| v * (1.0 / speed))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QScanSummary {
    pub masses: [f64; 3],
    pub grid: usize,
    pub directions: usize,
    /// Smallest `kinetic / scale` over the grid.
    pub min_kinetic_rel: ScanExtremum,
    /// Smallest `potential / scale` over the grid.
    pub min_potential_rel: ScanExtremum,
    /// Smallest `q / scale`.
    pub min_q_rel: ScanExtremum,
    pub evaluations: usize,
}

/// Signs of both summands of `q` over shape points and shape-velocity directions.
pub fn scan_q(m: &MassTriple, n: usize, directions: usize) -> Result<QScanSummary> {
    if n == 0 || directions == 0 {
        return Err(Error::Invalid("grid size and direction count must be positive".into()));
    }
    let cells = scan_grid(n);
    let per_cell = cells
        .par_iter()
        .map(|&(phi, theta)| {
            let mut acc = [ScanExtremum::none(); 3];
            for d in 0..directions {
                let alpha = 2.0 * PI * d as f64 / directions as f64;
                let st = shape_velocity_state(m, phi, theta, alpha)?;
                let t = q_terms(m, &st)?;
                let vals = [t.kinetic / t.scale, t.potential / t.scale, t.q / t.scale];
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a = a.take_min(ScanExtremum { value: v, phi, theta });
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = [ScanExtremum::none(); 3];
    for cell in per_cell {
        for (a, v) in acc.iter_mut().zip(cell) {
            *a = a.take_min(v);
        }
    }
    Ok(QScanSummary {
        masses: m.masses(),
        grid: n,
        directions,
        min_kinetic_rel: acc[0],
        min_potential_rel: acc[1],
        min_q_rel: acc[2],
        evaluations: cells.len() * directions,
    })
}

/// Samples `(t, z, z', f z')` at `per_step` points of every step in `[a, b]`.
fn samples_between(traj: &Trajectory, a: f64, b: f64, per_step: usize) -> Result<Vec<(f64, f64, f64, f64)>> {
    let m = traj.masses;
    let mut out = Vec::new();
    for seg in &traj.segments {
        if seg.t1() <= a || seg.t0 >= b {
            continue;
        }
        for j in 0..per_step {
            let t = seg.t0 + seg.h * j as f64 / per_step as f64;
            if t <= a || t >= b {
                continue;
            }
            let st = traj.state_at(t)?;
            let kin = shape_kinematics(&m, &st)?;
            out.push((t, kin.z, kin.zdot, f_value(&m, &st)? * kin.zdot));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub intervals: usize,
    pub violations: usize,
    /// Largest increase of `sign(z) f z'` between samples, relative to the
    /// interval's largest `|f z'|`.
    pub worst_violation: f64,
    pub pass: bool,
}

/// Whether `sign(z) * g` is non-increasing on every maximal run of samples
/// `(t, z, g)` where `z` keeps a sign.
pub fn monotone_on_sign_intervals(samples: &[(f64, f64, f64)], tol_rel: f64) -> MonotoneReport {
    let mut intervals = 0;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    let mut start = 0;
    while start < samples.len() {
        let sign = samples[start].1.signum();
        let mut end = start;
        while end + 1 < samples.len() && samples[end + 1].1.signum() == sign {
            end += 1;
        }
        let run = &samples[start..=end];
        let scale = run.iter().map(|s| s.2.abs()).fold(f64::MIN_POSITIVE, f64::max);
        intervals += 1;
        let mut bad = false;
        for w in run.windows(2) {
            let rise = sign * (w[1].2 - w[0].2) / scale;
            if rise > tol_rel {
                bad = true;
            }
            worst = worst.max(rise);
        }
        violations += bad as usize;
        start = end + 1;
    }
    MonotoneReport { intervals, violations, worst_violation: worst, pass: violations == 0 }
}

fn require_eclipses(events: &[EclipseEvent]) -> Result<Vec<f64>> {
    let times: Vec<f64> = events.iter().filter(|e| !e.grazing).map(|e| e.t).collect();
    if times.len() < 2 {
        return Err(Error::Invalid(format!("need at least two eclipses, found {}", times.len())));
    }
    Ok(times)
}

/// `f z'` is monotone (decreasing where `z > 0`, increasing where `z < 0`)
/// on every arc between eclipses, including the partial end arcs.
pub fn check_fzdot_monotone(traj: &Trajectory, events: &[EclipseEvent], tol_rel: f64) -> Result<MonotoneReport> {
    check_reduced(&traj.masses, &traj.initial, J_TOL_REL)?;
    let times = require_eclipses(events)?;
    let mut bounds = vec![traj.t_start()];
    bounds.extend(&times);
    bounds.push(traj.t_end());
    let mut total = MonotoneReport { intervals: 0, violations: 0, worst_violation: 0.0, pass: true };
    for w in bounds.windows(2) {
        let s: Vec<(f64, f64, f64)> =
            samples_between(traj, w[0], w[1], 8)?.into_iter().map(|(t, z, _, g)| (t, z, g)).collect();
        if s.len() < 2 {
            continue;
        }
        let r = monotone_on_sign_intervals(&s, tol_rel);
        total.intervals += r.intervals;
        total.violations += r.violations;
        total.worst_violation = total.worst_violation.max(r.worst_violation);
    }
    total.pass = total.violations == 0;
    Ok(total)
}

/// Number of sign changes of `v` in the sequence (zeros are skipped).
pub fn sign_changes(values: impl IntoIterator<Item = f64>) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for v in values {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub arcs: usize,
    /// Arcs where `z'` changes sign exactly once and `z` is strictly
    /// monotone on both sides.
    pub arcs_with_one_critical_point: usize,
    /// Start times of the failing arcs.
    pub failures: Vec<f64>,
    pub pass: bool,
}

/// Between consecutive eclipses `z` has exactly one critical point.
pub fn check_corollary(traj: &Trajectory, events: &[EclipseEvent]) -> Result<CorollaryReport> {
    check_reduced(&traj.masses, &traj.initial, J_TOL_REL)?;
    let times = require_eclipses(events)?;
    let mut good = 0;
    let mut failures = Vec::new();
    for w in times.windows(2) {
        let s = samples_between(traj, w[0], w[1], 8)?;
        let changes = sign_changes(s.iter().map(|x| x.2));
        let strict = s.windows(2).all(|p| {
            let dz = p[1].1 - p[0].1;
            let slope = if p[0].2 != 0.0 { p[0].2 } else { p[1].2 };
            dz == 0.0 || dz.signum() == slope.signum() || p[0].2.signum() != p[1].2.signum()
        });
        if changes == 1 && strict {
            good += 1;
        } else {
            failures.push(w[0]);
        }
    }
    let arcs = times.len() - 1;
    Ok(CorollaryReport { arcs, arcs_with_one_critical_point: good, pass: good == arcs, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub eclipses: usize,
    /// Upper bound on `f` along the run.
    pub f_bound: f64,
    /// Largest per-arc predicted gap `(t1 - t_prev) + z(t1) K / delta(t1)`.
    pub window: f64,
    pub max_gap: f64,
    /// Largest ratio of an actual gap to its predicted bound.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Each gap between eclipses is bounded by the time predicted from `f`'s
/// supremum `K` and the value `delta = |f z'|` at a point `t1` past the arc's
/// critical time: since `|f z'|` only grows from there on, `|z'| >= delta / K`
/// and the next zero comes within `|z(t1)| K / delta`.
pub fn check_recurrence(traj: &Trajectory, events: &[EclipseEvent]) -> Result<RecurrenceReport> {
    let m = traj.masses;
    check_reduced(&m, &traj.initial, J_TOL_REL)?;
    let times = require_eclipses(events)?;
    let mut f_bound: f64 = 0.0;
    for st in traj.step_states() {
        f_bound = f_bound.max(f_value(&m, &st)?);
    }
    let (mut window, mut worst_ratio, mut max_gap) = (0.0f64, 0.0f64, 0.0f64);
    for w in times.windows(2) {
        let s = samples_between(traj, w[0], w[1], 8)?;
        // first heading-home sample past the midpoint between the critical
        // time and the next eclipse
        let crit = s.iter().find(|x| x.1 * x.2 < 0.0).map(|x| x.0);
        let best = crit.and_then(|tc| s.iter().find(|x| x.1 * x.2 < 0.0 && x.0 >= 0.5 * (tc + w[1])).copied());
        let gap = w[1] - w[0];
        max_gap = max_gap.max(gap);
        let Some((t1, z1, _, g1)) = best else {
            worst_ratio = f64::INFINITY;
            continue;
        };
        let bound = (t1 - w[0]) + z1.abs() * f_bound / g1.abs();
        window = window.max(bound);
        worst_ratio = worst_ratio.max(gap / bound);
    }
    Ok(RecurrenceReport {
        eclipses: times.len(),
        f_bound,
        window,
        max_gap,
        worst_ratio,
        pass: worst_ratio <= 1.0 + 1e-9 && max_gap.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lagrange_circular_ic, lagrange_homothety_ic};
    use crate::vec2::Vec2;

    fn sample_state() -> BodyState {
        center_and_project(
            &MassTriple::new(1.0, 2.0, 3.0).unwrap(),
            &BodyState::new(
                0.0,
                [Vec2::new(0.1, 0.2), Vec2::new(1.3, -0.4), Vec2::new(-0.7, 0.9)],
                [Vec2::new(0.3, -0.1), Vec2::new(-0.2, 0.5), Vec2::new(0.1, 0.05)],
            ),
        )
        .unwrap()
    }

    #[test]
    fn f_equals_i_for_equal_masses_and_scales_quadratically() {
        let eq = MassTriple::equal();
        let st = sample_state();
        let i = moment_of_inertia(&eq, &squared_sides(&st.pos));
        assert!((f_value(&eq, &st).unwrap() - i).abs() < 1e-14 * i);
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let f = f_value(&m, &st).unwrap();
        assert!((f_value(&m, &st.scale_positions(1.7)).unwrap() - 1.7 * 1.7 * f).abs() < 1e-13 * f);
    }

    #[test]
    fn f_at_equilateral_unit_moment() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let st = lagrange_homothety_ic(&m, 1.0, 0.0).unwrap();
        assert!((f_value(&m, &st).unwrap() - 108.0 / 121.0).abs() < 1e-14);
    }

    #[test]
    fn q_vanishes_on_homothety() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        for rate in [0.0, -0.4] {
            let st = lagrange_homothety_ic(&m, 1.0, rate).unwrap();
            assert!(q_value(&m, &st).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn q_refuses_rotating_states() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let st = lagrange_circular_ic(&m, 1.0).unwrap();
        assert!(matches!(q_value(&m, &st), Err(Error::Nonreduced { .. })));
    }

    #[test]
    fn kinetic_factor_matches_closed_form() {
        let m = MassTriple::new(3.0, 4.0, 5.0).unwrap();
        for (phi, theta) in [(0.2, 0.3), (1.2, -2.0), (0.7, 3.0)] {
            let r = scan_row(&m, phi, theta).unwrap();
            assert!((r.ineq1 - r.ineq1_closed).abs() < 1e-12);
            assert!((r.q_kinetic_factor - r.ineq1).abs() < 1e-12);
            assert!((r.q_potential_term - 4.0 * r.ineq2).abs() < 1e-9 * r.ineq2.abs().max(1.0));
        }
    }

    #[test]
    fn shape_velocity_state_has_unit_speed_and_no_rotation() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let st = shape_velocity_state(&m, 0.4, 1.0, 0.7).unwrap();
        assert!(angular_momentum(&m, &st).abs() < 1e-14);
        let kin = shape_kinematics(&m, &st).unwrap();
        assert!((kin.k_round - 1.0).abs() < 1e-12);
        assert!((kin.point.phi - 0.4).abs() < 1e-12 && (kin.point.theta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_oracle_for_monotone_and_critical_points() {
        // z = sin t, f = 1, q = 1: f z' = cos t falls while sin t > 0
        let samples: Vec<(f64, f64, f64)> = (1..2000)
            .map(|k| {
                let t = k as f64 * 0.01;
                (t, t.sin(), t.cos())
            })
            .collect();
        let r = monotone_on_sign_intervals(&samples, 1e-12);
        assert_eq!(r.intervals, 7);
        assert!(r.pass);
        let flipped: Vec<_> = samples.iter().map(|&(t, z, g)| (t, z, -g)).collect();
        assert!(!monotone_on_sign_intervals(&flipped, 1e-12).pass);
        let half: Vec<f64> = (1..314).map(|k| (k as f64 * 0.01).cos()).collect();
        assert_eq!(sign_changes(half), 1);
    }

    #[test]
    fn scan_grid_interior() {
        let g = scan_grid(4);
        assert_eq!(g.len(), 16);
        assert!(g.iter().all(|&(phi, theta)| phi > 0.0 && phi < FRAC_PI_2 && theta > -PI && theta < PI));
    }
}
