//! Equations of motion and the trajectory container.

use std::ops::ControlFlow;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::integrator::{self, DenseSegment, StepControl, StepStats};
use crate::error::{Error, Result};
use crate::triangle::{self, squared_sides, unit_moment, BodyState, MassTriple};
use crate::vec2::Vec2;

/// Phase-space dimension: three planar positions then three velocities.
pub const DIM: usize = 12;

/// Newtonian accelerations `a_i = sum_j m_j (x_j - x_i) / r_ij^3`.
pub fn acceleration(m: &MassTriple, pos: &[Vec2; 3]) -> Result<[Vec2; 3]> {
    let s = squared_sides(pos);
    let scale = unit_moment(&s);
    for (k, &sk) in s.iter().enumerate() {
        if !(sk > triangle::COLLISION_REL * scale) {
            return Err(Error::Collision { side: k + 1, value: sk });
        }
    }
    Ok(raw_acceleration(m, pos))
}

fn raw_acceleration(m: &MassTriple, pos: &[Vec2; 3]) -> [Vec2; 3] {
    let ms = m.masses();
    let mut acc = [Vec2::ZERO; 3];
    for i in 0..3 {
        for j in (i + 1)..3 {
            let d = pos[j] - pos[i];
            let r2 = d.norm2();
            let inv3 = 1.0 / (r2 * r2.sqrt());
            acc[i] += d * (ms[j] * inv3);
            acc[j] -= d * (ms[i] * inv3);
        }
    }
    acc
}

fn vector_field<T: Float>(ms: &[T; 3], y: &[T; DIM]) -> [T; DIM] {
    let mut out = [T::zero(); DIM];
    out[..6].copy_from_slice(&y[6..]);
    for i in 0..3 {
        for j in (i + 1)..3 {
            let dx = y[2 * j] - y[2 * i];
            let dy = y[2 * j + 1] - y[2 * i + 1];
            let r2 = dx * dx + dy * dy;
            let inv3 = T::one() / (r2 * r2.sqrt());
            out[6 + 2 * i] = out[6 + 2 * i] + dx * ms[j] * inv3;
            out[7 + 2 * i] = out[7 + 2 * i] + dy * ms[j] * inv3;
            out[6 + 2 * j] = out[6 + 2 * j] - dx * ms[i] * inv3;
            out[7 + 2 * j] = out[7 + 2 * j] - dy * ms[i] * inv3;
        }
    }
    out
}

/// Arithmetic used for the integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    #[default]
    Double,
    /// Double-double (about 32 significant digits); slower, for unstable
    /// solutions whose rounding errors grow exponentially.
    DoubleDouble,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// Stop when `min_k sqrt(s_k) / sqrt(I1)` falls below this.
    pub collision_cutoff: f64,
    /// Stop when `I / I0` exceeds this.
    pub escape_cutoff: f64,
    /// Stop when `I / I0` falls below this (approach to triple collision).
    pub triple_cutoff: f64,
    pub max_steps: usize,
    pub precision: Precision,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            collision_cutoff: 1e-3,
            escape_cutoff: 1e4,
            triple_cutoff: 1e-4,
            max_steps: 20_000_000,
            precision: Precision::Double,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.rel_tol)
            || !(self.abs_tol >= 0.0)
            || !positive(self.collision_cutoff)
            || !positive(self.escape_cutoff)
            || !(self.triple_cutoff >= 0.0)
            || self.max_step.is_some_and(|h| !positive(h))
        {
            return Err(Error::Invalid(format!("invalid integrator config {self:?}")));
        }
        Ok(())
    }

    fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rel_tol,
            atol: self.abs_tol,
            h_max: self.max_step,
            h_init: None,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    TimeEnd { t: f64 },
    Collision { t: f64, side: usize },
    TripleCollision { t: f64 },
    Escape { t: f64 },
}

impl Termination {
    pub fn time(&self) -> f64 {
        match *self {
            Termination::TimeEnd { t }
            | Termination::Collision { t, .. }
            | Termination::TripleCollision { t }
            | Termination::Escape { t } => t,
        }
    }

    pub fn is_complete(&self) -> bool {
        matches!(self, Termination::TimeEnd { .. })
    }

    pub fn is_collision(&self) -> bool {
        matches!(self, Termination::Collision { .. } | Termination::TripleCollision { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::TimeEnd { .. } => "time-end",
            Termination::Collision { .. } => "collision",
            Termination::TripleCollision { .. } => "triple-collision",
            Termination::Escape { .. } => "escape",
        }
    }
}

/// An integrated solution: the accepted steps with their interpolants.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub masses: MassTriple,
    pub segments: Vec<DenseSegment<f64, DIM>>,
    pub initial: BodyState,
    pub termination: Termination,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.initial.t
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(self.initial.t, |s| s.t1())
    }

    /// Start times of every step followed by the final time.
    pub fn step_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = std::iter::once(self.t_start()).chain(self.segments.iter().map(|s| s.t1())).collect();
        out.dedup();
        out
    }

    pub fn segment_index(&self, t: f64) -> Option<usize> {
        if self.segments.is_empty() || t < self.t_start() || t > self.t_end() {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t1() < t);
        Some(idx.min(self.segments.len() - 1))
    }

    /// Interpolated state at `t` within the integrated span.
    pub fn state_at(&self, t: f64) -> Result<BodyState> {
        if self.segments.is_empty() && t == self.t_start() {
            return Ok(self.initial);
        }
        let idx = self
            .segment_index(t)
            .ok_or_else(|| Error::Invalid(format!("t = {t} outside [{}, {}]", self.t_start(), self.t_end())))?;
        Ok(BodyState::from_array(t, &self.segments[idx].eval(t)))
    }

    /// States at the step boundaries.
    pub fn step_states(&self) -> Vec<BodyState> {
        let mut out = vec![self.initial];
        out.extend(self.segments.iter().map(|s| BodyState::from_array(s.t1(), &s.end())));
        out
    }

    pub fn final_state(&self) -> BodyState {
        self.segments
            .last()
            .map_or(self.initial, |s| BodyState::from_array(s.t1(), &s.end()))
    }

    /// Error unless the run reached its end time.
    pub fn require_complete(&self) -> Result<&Self> {
        if self.termination.is_complete() {
            Ok(self)
        } else {
            Err(Error::Terminated { reason: self.termination.label(), t: self.termination.time() })
        }
    }

    /// Largest relative energy drift and absolute angular momentum drift
    /// over the step boundaries.
    pub fn conservation_drift(&self) -> Result<(f64, f64)> {
        let c0 = triangle::conserved(&self.masses, &self.initial)?;
        let scale_e = c0.energy.abs().max(f64::MIN_POSITIVE);
        let mut de: f64 = 0.0;
        let mut dj: f64 = 0.0;
        for st in self.step_states() {
            let c = triangle::conserved(&self.masses, &st)?;
            de = de.max((c.energy - c0.energy).abs() / scale_e);
            dj = dj.max((c.angular_momentum - c0.angular_momentum).abs());
        }
        Ok((de, dj))
    }
}

/// Integrate Newton's equations from `state0` over `duration`.
pub fn integrate(m: &MassTriple, state0: &BodyState, duration: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let y0 = state0.to_array();
    match cfg.precision {
        Precision::Double => integrate_from(m, state0.t, y0, duration, cfg),
        Precision::DoubleDouble => integrate_from(m, state0.t, y0.map(TwoFloat::from), duration, cfg),
    }
}

/// Integrate from a phase point given in the scalar type `T` (positions
/// then velocities). The arithmetic follows `T`; `cfg.precision` is ignored.
pub fn integrate_from<T: Float>(
    m: &MassTriple,
    t0: f64,
    y0: [T; DIM],
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !duration.is_finite() {
        return Err(Error::Invalid(format!("duration must be finite, got {duration}")));
    }
    let cast = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let state0 = BodyState::from_array(t0, &y0.map(cast));
    acceleration(m, &state0.pos)?;
    let i0 = triangle::moment_of_inertia(m, &squared_sides(&state0.pos));
    let ms: [T; 3] = m.masses().map(|v| T::from(v).expect("mass converts"));
    let lift = |v: f64| T::from(v).expect("time converts");
    let mut segments = Vec::new();
    let mut termination = Termination::TimeEnd { t: t0 + duration };

    let check = |t: f64, y: &[f64; DIM]| -> Option<Termination> {
        let pos = [Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]), Vec2::new(y[4], y[5])];
        let s = squared_sides(&pos);
        let i1 = unit_moment(&s);
        let (k, smin) = s.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        let i = triangle::moment_of_inertia(m, &s);
        if i < cfg.triple_cutoff * i0 {
            Some(Termination::TripleCollision { t })
        } else if (smin / i1).sqrt() < cfg.collision_cutoff {
            Some(Termination::Collision { t, side: k + 1 })
        } else if i > cfg.escape_cutoff * i0 {
            Some(Termination::Escape { t })
        } else {
            None
        }
    };

    let outcome = integrator::integrate(
        |_, y| vector_field(&ms, y),
        lift(t0),
        y0,
        lift(t0) + lift(duration),
        &cfg.step_control(),
        |seg| {
            let seg = seg.to_f64();
            let mid = seg.t0 + 0.5 * seg.h;
            let hit = check(mid, &seg.eval(mid)).or_else(|| check(seg.t1(), &seg.end()));
            segments.push(seg);
            match hit {
                Some(reason) => {
                    termination = reason;
                    ControlFlow::Break(())
                }
                None => ControlFlow::Continue(()),
            }
        },
    )?;
    Ok(Trajectory { masses: *m, segments, initial: state0, termination, stats: outcome.stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral_accelerations_point_to_centroid() {
        let a = 1.7;
        let pos = [Vec2::new(0.0, 0.0), Vec2::new(a, 0.0), Vec2::new(0.5 * a, 0.5 * 3f64.sqrt() * a)];
        let centroid = (pos[0] + pos[1] + pos[2]) * (1.0 / 3.0);
        let acc = acceleration(&MassTriple::equal(), &pos).unwrap();
        for k in 0..3 {
            assert!((acc[k].norm() - 3f64.sqrt() / (a * a)).abs() < 1e-14);
            assert!(acc[k].cross(centroid - pos[k]).abs() < 1e-14);
            assert!(acc[k].dot(centroid - pos[k]) > 0.0);
        }
    }

    #[test]
    fn collision_rejected() {
        let pos = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        assert!(matches!(acceleration(&MassTriple::equal(), &pos), Err(Error::Collision { side: 3, .. })));
    }

    #[test]
    fn two_body_limit() {
        let m = MassTriple::new(2.0, 3.0, 1e-30).unwrap();
        let pos = [Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1e6)];
        let acc = acceleration(&m, &pos).unwrap();
        assert!((acc[0].x - 3.0 / 4.0).abs() < 1e-12);
        assert!((acc[1].x + 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_keeps_state() {
        let st = BodyState::new(
            0.5,
            [Vec2::new(1.0, 0.0), Vec2::new(-0.5, 0.8), Vec2::new(-0.5, -0.8)],
            [Vec2::new(0.0, 0.1), Vec2::new(0.2, 0.0), Vec2::new(-0.2, -0.1)],
        );
        let traj = integrate(&MassTriple::equal(), &st, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.final_state(), st);
        assert_eq!(traj.state_at(0.5).unwrap(), st);
    }
}
