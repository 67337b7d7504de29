//! Periodic three-body loops by minimizing the Lagrangian action over
//! truncated Fourier series, and the hand-off of a converged loop to the
//! integrator as an initial condition.
//!
//! Loops are choreographies: body `k` follows body 1 with a time shift of
//! `(k - 1) T / 3`. Harmonics divisible by three are left out, which keeps
//! the center of mass at the origin. The `eight` symmetry further restricts
//! body 1 to `x` odd in time with odd harmonics and `y` odd in time with even
//! harmonics, the symmetry class of the figure-eight.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, IntegratorConfig};
use crate::error::{Error, Result};
use crate::theorem::J_TOL_REL;
use crate::triangle::{angular_momentum, center_and_project, BodyState, MassTriple};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    Choreography,
    Eight,
}

/// Fourier coefficients of one planar curve; entry `n - 1` multiplies
/// `cos(n w t)` or `sin(n w t)` with `w = 2 pi / T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub x_cos: Vec<f64>,
    pub x_sin: Vec<f64>,
    pub y_cos: Vec<f64>,
    pub y_sin: Vec<f64>,
}

impl Series {
    fn zeros(n: usize) -> Self {
        Self { x_cos: vec![0.0; n], x_sin: vec![0.0; n], y_cos: vec![0.0; n], y_sin: vec![0.0; n] }
    }

    fn harmonics(&self) -> usize {
        self.x_cos.len()
    }

    fn is_well_formed(&self) -> bool {
        let n = self.harmonics();
        self.x_sin.len() == n && self.y_cos.len() == n && self.y_sin.len() == n
    }

    /// The same curve started `shift` later: `x(t + shift)`.
    fn shifted(&self, omega: f64, shift: f64) -> Self {
        let mut out = Series::zeros(self.harmonics());
        for i in 0..self.harmonics() {
            let (s, c) = ((i + 1) as f64 * omega * shift).sin_cos();
            out.x_cos[i] = self.x_cos[i] * c + self.x_sin[i] * s;
            out.x_sin[i] = self.x_sin[i] * c - self.x_cos[i] * s;
            out.y_cos[i] = self.y_cos[i] * c + self.y_sin[i] * s;
            out.y_sin[i] = self.y_sin[i] * c - self.y_cos[i] * s;
        }
        out
    }

    /// Adjoint of [`Series::shifted`], used to pull gradients back to body 1.
    fn accumulate_unshifted(&self, omega: f64, shift: f64, into: &mut Series) {
        for i in 0..self.harmonics() {
            let (s, c) = ((i + 1) as f64 * omega * shift).sin_cos();
            into.x_cos[i] += self.x_cos[i] * c - self.x_sin[i] * s;
            into.x_sin[i] += self.x_cos[i] * s + self.x_sin[i] * c;
            into.y_cos[i] += self.y_cos[i] * c - self.y_sin[i] * s;
            into.y_sin[i] += self.y_cos[i] * s + self.y_sin[i] * c;
        }
    }

    fn eval(&self, omega: f64, t: f64, order: u32) -> Vec2 {
        let mut p = Vec2::ZERO;
        for i in 0..self.harmonics() {
            let k = (i + 1) as f64 * omega;
            let (s, c) = (k * t).sin_cos();
            // d^order/dt^order of (cos, sin) cycles through (-sin, cos), (-cos, -sin), ...
            let (dc, ds) = match order % 4 {
                0 => (c, s),
                1 => (-s, c),
                2 => (-c, -s),
                _ => (s, -c),
            };
            let f = k.powi(order as i32);
            p += Vec2::new(self.x_cos[i] * dc + self.x_sin[i] * ds, self.y_cos[i] * dc + self.y_sin[i] * ds) * f;
        }
        p
    }

    /// `integral_0^T |x'|^2 dt` by Parseval.
    fn speed_integral(&self, omega: f64, period: f64) -> f64 {
        (0..self.harmonics())
            .map(|i| {
                let k = (i + 1) as f64 * omega;
                k * k * (self.x_cos[i].powi(2) + self.x_sin[i].powi(2) + self.y_cos[i].powi(2) + self.y_sin[i].powi(2))
            })
            .sum::<f64>()
            * 0.5
            * period
    }
}

/// A periodic loop for the three bodies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopPath {
    pub masses: [f64; 3],
    pub period: f64,
    pub symmetry: Symmetry,
    pub bodies: [Series; 3],
}

/// Which coefficient of body 1 a free parameter sets.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    XCos,
    XSin,
    YCos,
    YSin,
}

fn free_slots(symmetry: Symmetry, harmonics: usize) -> Vec<(usize, Slot)> {
    let mut out = Vec::new();
    for n in (1..=harmonics).filter(|n| n % 3 != 0) {
        match symmetry {
            Symmetry::Choreography => {
                out.extend([Slot::XCos, Slot::XSin, Slot::YCos, Slot::YSin].map(|s| (n, s)));
            }
            Symmetry::Eight => out.push((n, if n % 2 == 1 { Slot::XSin } else { Slot::YSin })),
        }
    }
    out
}

fn slot_mut(s: &mut Series, n: usize, slot: Slot) -> &mut f64 {
    let v = match slot {
        Slot::XCos => &mut s.x_cos,
        Slot::XSin => &mut s.x_sin,
        Slot::YCos => &mut s.y_cos,
        Slot::YSin => &mut s.y_sin,
    };
    &mut v[n - 1]
}

fn slot_get(s: &Series, n: usize, slot: Slot) -> f64 {
    let v = match slot {
        Slot::XCos => &s.x_cos,
        Slot::XSin => &s.x_sin,
        Slot::YCos => &s.y_cos,
        Slot::YSin => &s.y_sin,
    };
    v[n - 1]
}

impl LoopPath {
    /// Choreography built from body 1's curve.
    pub fn choreography(period: f64, symmetry: Symmetry, first: Series) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) || !first.is_well_formed() {
            return Err(Error::Invalid("loop needs a positive period and equal-length coefficient lists".into()));
        }
        let mut first = first;
        // project onto the symmetry class
        let n = first.harmonics();
        let keep = free_slots(symmetry, n);
        let mut clean = Series::zeros(n);
        for &(k, slot) in &keep {
            *slot_mut(&mut clean, k, slot) = slot_get(&first, k, slot);
        }
        first = clean;
        let omega = 2.0 * PI / period;
        let bodies = [first.clone(), first.shifted(omega, period / 3.0), first.shifted(omega, 2.0 * period / 3.0)];
        Ok(Self { masses: [1.0; 3], period, symmetry, bodies })
    }

    /// The built-in figure-eight seed `(sin t, 0.35 sin 2t)` with period `2 pi`.
    pub fn eight_seed(harmonics: usize) -> Result<Self> {
        if harmonics < 2 {
            return Err(Error::Invalid("the eight seed needs at least two harmonics".into()));
        }
        let mut s = Series::zeros(harmonics);
        s.x_sin[0] = 1.0;
        s.y_sin[1] = 0.35;
        Self::choreography(2.0 * PI, Symmetry::Eight, s)
    }

    /// Equal-mass Lagrange rotation as a loop: equilateral, angular velocity `2 pi / T`.
    pub fn lagrange_circle(period: f64, harmonics: usize) -> Result<Self> {
        let omega = 2.0 * PI / period;
        // side a with a^3 omega^2 = M = 3, circumradius a / sqrt 3
        let radius = (3.0 / (omega * omega)).cbrt() / 3f64.sqrt();
        let mut s = Series::zeros(harmonics.max(1));
        s.x_cos[0] = radius;
        s.y_sin[0] = radius;
        Self::choreography(period, Symmetry::Choreography, s)
    }

    pub fn harmonics(&self) -> usize {
        self.bodies[0].harmonics()
    }

    /// Same loop with the series truncated or zero-padded to `n` harmonics.
    pub fn with_harmonics(&self, n: usize) -> Result<Self> {
        let src = &self.bodies[0];
        let mut first = Series::zeros(n);
        for i in 0..n.min(src.harmonics()) {
            first.x_cos[i] = src.x_cos[i];
            first.x_sin[i] = src.x_sin[i];
            first.y_cos[i] = src.y_cos[i];
            first.y_sin[i] = src.y_sin[i];
        }
        Self::choreography(self.period, self.symmetry, first)
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn mass_triple(&self) -> Result<MassTriple> {
        MassTriple::new(self.masses[0], self.masses[1], self.masses[2])
    }

    /// Checks the stored bodies against the symmetry tag.
    pub fn validate(&self) -> Result<()> {
        if !self.bodies.iter().all(|b| b.is_well_formed() && b.harmonics() == self.harmonics()) {
            return Err(Error::Invalid("bodies must share one harmonic count".into()));
        }
        if self.masses != [1.0; 3] {
            return Err(Error::Invalid("choreographies need equal unit masses".into()));
        }
        let rebuilt = Self::choreography(self.period, self.symmetry, self.bodies[0].clone())?;
        let diff = self
            .bodies
            .iter()
            .zip(&rebuilt.bodies)
            .flat_map(|(a, b)| {
                [(&a.x_cos, &b.x_cos), (&a.x_sin, &b.x_sin), (&a.y_cos, &b.y_cos), (&a.y_sin, &b.y_sin)]
                    .into_iter()
                    .flat_map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).abs()))
            })
            .fold(0.0, f64::max);
        if diff > 1e-12 {
            return Err(Error::Invalid(format!("bodies break the {:?} symmetry by {diff:e}", self.symmetry)));
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<f64> {
        free_slots(self.symmetry, self.harmonics()).into_iter().map(|(n, s)| slot_get(&self.bodies[0], n, s)).collect()
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let slots = free_slots(self.symmetry, self.harmonics());
        if params.len() != slots.len() {
            return Err(Error::Invalid(format!("expected {} parameters, got {}", slots.len(), params.len())));
        }
        let mut first = Series::zeros(self.harmonics());
        for (&(n, s), &v) in slots.iter().zip(params) {
            *slot_mut(&mut first, n, s) = v;
        }
        Self::choreography(self.period, self.symmetry, first)
    }

    pub fn positions(&self, t: f64) -> [Vec2; 3] {
        let w = self.omega();
        std::array::from_fn(|k| self.bodies[k].eval(w, t, 0))
    }

    pub fn velocities(&self, t: f64) -> [Vec2; 3] {
        let w = self.omega();
        std::array::from_fn(|k| self.bodies[k].eval(w, t, 1))
    }

    pub fn accelerations(&self, t: f64) -> [Vec2; 3] {
        let w = self.omega();
        std::array::from_fn(|k| self.bodies[k].eval(w, t, 2))
    }

    pub fn state(&self, t: f64) -> BodyState {
        BodyState::new(t, self.positions(t), self.velocities(t))
    }

    /// Default quadrature: twelve nodes per harmonic.
    pub fn nodes(&self) -> usize {
        12 * self.harmonics()
    }

    /// Positions scaled by `sigma` and period by `sigma^{3/2}`.
    pub fn rescaled(&self, sigma: f64) -> Self {
        let mut out = self.clone();
        out.period *= sigma.powf(1.5);
        for b in &mut out.bodies {
            for v in [&mut b.x_cos, &mut b.x_sin, &mut b.y_cos, &mut b.y_sin] {
                v.iter_mut().for_each(|c| *c *= sigma);
            }
        }
        out
    }

    /// Every body started `shift` later; keeps the choreography, not the eight form.
    pub fn time_shifted(&self, shift: f64) -> Self {
        let w = self.omega();
        let mut out = self.clone();
        out.symmetry = Symmetry::Choreography;
        out.bodies = std::array::from_fn(|k| self.bodies[k].shifted(w, shift));
        out
    }

    /// The whole loop rotated about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let mut out = self.clone();
        out.symmetry = Symmetry::Choreography;
        for (b, src) in out.bodies.iter_mut().zip(&self.bodies) {
            for i in 0..src.harmonics() {
                b.x_cos[i] = c * src.x_cos[i] - s * src.y_cos[i];
                b.y_cos[i] = s * src.x_cos[i] + c * src.y_cos[i];
                b.x_sin[i] = c * src.x_sin[i] - s * src.y_sin[i];
                b.y_sin[i] = s * src.x_sin[i] + c * src.y_sin[i];
            }
        }
        out
    }
}

/// Action value, parameter gradient, and smallest distance at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionEval {
    pub action: f64,
    pub gradient: Vec<f64>,
    pub min_distance: f64,
}

/// `integral_0^T (K / 2 + U) dt`, kinetic part exact, potential by the
/// trapezoid rule on `loop_.nodes()` equally spaced times.
pub fn action(loop_: &LoopPath) -> Result<f64> {
    action_and_gradient(loop_).map(|e| e.action)
}

pub fn action_gradient(loop_: &LoopPath) -> Result<Vec<f64>> {
    action_and_gradient(loop_).map(|e| e.gradient)
}

pub fn action_and_gradient(loop_: &LoopPath) -> Result<ActionEval> {
    let m = loop_.masses;
    let w = loop_.omega();
    let n = loop_.harmonics();
    let q = loop_.nodes();
    let dt = loop_.period / q as f64;
    let kinetic: f64 = (0..3).map(|k| 0.5 * m[k] * loop_.bodies[k].speed_integral(w, loop_.period)).sum();

    // per node: potential, force on each body, smallest distance
    let per_node = (0..q)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 * dt;
            let x = loop_.positions(t);
            let mut u = 0.0;
            let mut dudx = [Vec2::ZERO; 3];
            let mut dmin = f64::INFINITY;
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let d = x[a] - x[b];
                let r = d.norm();
                if !(r > 0.0) {
                    return Err(Error::Collision { side: 3 - a - b + 1, value: r });
                }
                dmin = dmin.min(r);
                let mm = m[a] * m[b];
                u += mm / r;
                let g = d * (-mm / (r * r * r));
                dudx[a] += g;
                dudx[b] -= g;
            }
            Ok((t, u, dudx, dmin))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut potential = 0.0;
    let mut min_distance = f64::INFINITY;
    let mut grads = [Series::zeros(n), Series::zeros(n), Series::zeros(n)];
    for &(t, u, dudx, dmin) in &per_node {
        potential += u * dt;
        min_distance = min_distance.min(dmin);
        for i in 0..n {
            let (s, c) = ((i + 1) as f64 * w * t).sin_cos();
            for k in 0..3 {
                grads[k].x_cos[i] += dudx[k].x * c * dt;
                grads[k].x_sin[i] += dudx[k].x * s * dt;
                grads[k].y_cos[i] += dudx[k].y * c * dt;
                grads[k].y_sin[i] += dudx[k].y * s * dt;
            }
        }
    }
    for k in 0..3 {
        let b = &loop_.bodies[k];
        let g = &mut grads[k];
        for i in 0..n {
            let f = m[k] * 0.5 * loop_.period * ((i + 1) as f64 * w).powi(2);
            g.x_cos[i] += f * b.x_cos[i];
            g.x_sin[i] += f * b.x_sin[i];
            g.y_cos[i] += f * b.y_cos[i];
            g.y_sin[i] += f * b.y_sin[i];
        }
    }
    let mut first = Series::zeros(n);
    for (k, g) in grads.iter().enumerate() {
        g.accumulate_unshifted(w, k as f64 * loop_.period / 3.0, &mut first);
    }
    let gradient = free_slots(loop_.symmetry, n).into_iter().map(|(h, s)| slot_get(&first, h, s)).collect();
    Ok(ActionEval { action: kinetic + potential, gradient, min_distance })
}

/// Largest mismatch between the series' acceleration and Newton's, relative
/// to the largest Newtonian acceleration, over `samples` equally spaced times.
pub fn equation_residual(loop_: &LoopPath, samples: usize) -> Result<f64> {
    let m = loop_.mass_triple()?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..samples {
        let t = loop_.period * j as f64 / samples as f64;
        let newton = crate::dynamics::acceleration(&m, &loop_.positions(t))?;
        let series = loop_.accelerations(t);
        for k in 0..3 {
            worst = worst.max((newton[k] - series[k]).norm());
            scale = scale.max(newton[k].norm());
        }
    }
    Ok(worst / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub gradient_tol: f64,
    pub max_iterations: usize,
    pub memory: usize,
    /// Steps may not bring the closest approach below this fraction of the
    /// initial loop's.
    pub min_distance_fraction: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { gradient_tol: 1e-10, max_iterations: 5000, memory: 12, min_distance_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub action: f64,
    pub gradient_norm: f64,
    pub min_distance: f64,
    pub equation_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// L-BFGS descent on the free coefficients with a backtracking line search.
pub fn minimize(initial: &LoopPath, opts: &MinimizeOptions) -> Result<(LoopPath, ActionReport)> {
    initial.validate()?;
    let first = action_and_gradient(initial)?;
    let floor = opts.min_distance_fraction * first.min_distance;
    let mut x = initial.params();
    let mut cur = first;
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < opts.max_iterations && norm(&cur.gradient) > opts.gradient_tol {
        iterations += 1;
        // two-loop recursion
        let mut d: Vec<f64> = cur.gradient.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.last() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|di| *di *= gamma);
        } else {
            let g = norm(&d);
            d.iter_mut().for_each(|di| *di *= 1e-2 / g.max(1e-2));
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        d.iter_mut().for_each(|di| *di = -*di);
        let mut slope = dot(&cur.gradient, &d);
        if !(slope < 0.0) {
            history.clear();
            d = cur.gradient.iter().map(|g| -g).collect();
            slope = dot(&cur.gradient, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-20 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            if let Ok(e) = initial.with_params(&trial).and_then(|l| action_and_gradient(&l)) {
                let decrease = e.action <= cur.action + 1e-4 * step * slope;
                // near the optimum the action is flat to rounding; accept any
                // step that shrinks the gradient without raising the action
                let flat = (e.action - cur.action).abs() <= 1e-14 * cur.action.abs()
                    && norm(&e.gradient) < norm(&cur.gradient);
                if e.min_distance >= floor && e.action.is_finite() && (decrease || flat) {
                    accepted = Some((trial, e));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, e)) = accepted else {
            if history.is_empty() {
                stalled = true;
                break;
            }
            history.clear();
            continue;
        };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = e.gradient.iter().zip(&cur.gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            history.push((s, y, 1.0 / sy));
            if history.len() > opts.memory {
                history.remove(0);
            }
        }
        x = trial;
        cur = e;
    }
    if cur.min_distance < floor {
        return Err(Error::CollisionApproach(cur.min_distance));
    }
    let out = initial.with_params(&x)?;
    let report = ActionReport {
        action: cur.action,
        gradient_norm: norm(&cur.gradient),
        min_distance: cur.min_distance,
        equation_residual: equation_residual(&out, 4 * out.nodes())?,
        iterations,
        converged: !stalled && norm(&cur.gradient) <= opts.gradient_tol,
    };
    Ok((out, report))
}

/// Largest `|J|` over `samples` equally spaced times of the loop.
pub fn max_angular_momentum(loop_: &LoopPath, samples: usize) -> Result<f64> {
    let m = loop_.mass_triple()?;
    Ok((0..samples)
        .map(|j| angular_momentum(&m, &loop_.state(loop_.period * j as f64 / samples as f64)).abs())
        .fold(0.0, f64::max))
}

/// Figure-eight search: minimize from the built-in seed, doubling the
/// harmonic count (warm-started) until Newton's equations hold to
/// `residual_tol` or `max_harmonics` is reached.
pub fn find_eight(
    harmonics: usize,
    max_harmonics: usize,
    residual_tol: f64,
    opts: &MinimizeOptions,
) -> Result<(LoopPath, ActionReport)> {
    let mut seed = LoopPath::eight_seed(harmonics)?;
    loop {
        let (found, report) = minimize(&seed, opts)?;
        let n = found.harmonics();
        if report.equation_residual < residual_tol || 2 * n > max_harmonics {
            return Ok((found, report));
        }
        seed = found.with_harmonics(2 * n)?;
    }
}

/// Phase at which to start the integrated eight: a twelfth of a period
/// before the eclipse of body 1 at `t = 0`, so the run starts between
/// eclipses and the first one seen is body 1's.
pub fn eight_start_phase(loop_: &LoopPath) -> f64 {
    -loop_.period / 12.0
}

/// Result of handing a loop to the integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub state: BodyState,
    pub period: f64,
    /// `|state(T) - state(0)| / |state(0)|` over positions and velocities.
    pub mismatch: f64,
}

/// Initial condition taken from the loop at `phase`, integrated for one
/// period. Fails with `Nonreduced` for rotating loops and `Nonperiodic` when
/// the return mismatch exceeds `threshold`.
pub fn refine_to_orbit(loop_: &LoopPath, phase: f64, threshold: f64, cfg: &IntegratorConfig) -> Result<OrbitReport> {
    let m = loop_.mass_triple()?;
    let raw = loop_.state(phase);
    let raw = BodyState::new(0.0, raw.pos, raw.vel);
    let j = angular_momentum(&m, &raw);
    let scale: f64 = raw.pos.iter().zip(&raw.vel).map(|(p, v)| p.norm() * v.norm()).sum();
    if j.abs() > J_TOL_REL * scale {
        return Err(Error::Nonreduced { j, tol: J_TOL_REL * scale });
    }
    let state = center_and_project(&m, &raw)?;
    let traj = integrate(&m, &state, loop_.period, cfg)?;
    traj.require_complete()?;
    let (a, b) = (state.to_array(), traj.final_state().to_array());
    let num = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let den = a.iter().map(|p| p * p).sum::<f64>().sqrt();
    let mismatch = num / den;
    if !(mismatch < threshold) {
        return Err(Error::Nonperiodic { mismatch, threshold });
    }
    Ok(OrbitReport { state, period: loop_.period, mismatch })
}
