//! Masses, planar three-body configurations and their scalar invariants.
//!
//! Side conventions: `s[k]` is the squared length of the side opposite body
//! `k`, i.e. `s1 = |x2 - x3|^2`, `s2 = |x3 - x1|^2`, `s3 = |x1 - x2|^2`.
//! The signed area is positive when bodies 1 -> 2 -> 3 run counterclockwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Squared sides below this multiple of `I1` count as a binary collision.
pub const COLLISION_REL: f64 = 1e-12;

/// The three point masses (G = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct MassTriple {
    m: [f64; 3],
}

impl MassTriple {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        let m = [m1, m2, m3];
        if m.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Invalid(format!("masses must be positive and finite, got {m:?}")));
        }
        Ok(Self { m })
    }

    pub fn equal() -> Self {
        Self { m: [1.0; 3] }
    }

    pub fn masses(&self) -> [f64; 3] {
        self.m
    }

    pub fn total(&self) -> f64 {
        self.m[0] + self.m[1] + self.m[2]
    }

    /// `c(m) = m1 m2 m3 / M`.
    pub fn c(&self) -> f64 {
        self.m[0] * self.m[1] * self.m[2] / self.total()
    }

    /// Pair weights `p_k = m_i m_j / M`, indexed by the side opposite body `k`.
    pub fn p(&self) -> [f64; 3] {
        let [m1, m2, m3] = self.m;
        let total = self.total();
        [m2 * m3 / total, m3 * m1 / total, m1 * m2 / total]
    }

    /// Reduced mass of the (1,2) pair.
    pub fn mu1(&self) -> f64 {
        1.0 / (1.0 / self.m[0] + 1.0 / self.m[1])
    }

    /// Reduced mass of body 3 against the (1,2) pair.
    pub fn mu2(&self) -> f64 {
        1.0 / (1.0 / self.m[2] + 1.0 / (self.m[0] + self.m[1]))
    }

    pub fn is_equal_mass(&self) -> bool {
        self.m[0] == self.m[1] && self.m[1] == self.m[2]
    }
}

impl TryFrom<[f64; 3]> for MassTriple {
    type Error = Error;
    fn try_from(m: [f64; 3]) -> Result<Self> {
        MassTriple::new(m[0], m[1], m[2])
    }
}

impl From<MassTriple> for [f64; 3] {
    fn from(m: MassTriple) -> [f64; 3] {
        m.m
    }
}

impl std::str::FromStr for MassTriple {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Invalid(format!("bad mass list {s:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => MassTriple::new(*a, *b, *c),
            _ => Err(Error::Invalid(format!("expected three masses, got {s:?}"))),
        }
    }
}

/// Phase point of the planar three-body problem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyState {
    pub t: f64,
    pub pos: [Vec2; 3],
    pub vel: [Vec2; 3],
}

impl BodyState {
    pub fn new(t: f64, pos: [Vec2; 3], vel: [Vec2; 3]) -> Self {
        Self { t, pos, vel }
    }

    pub fn at_rest(pos: [Vec2; 3]) -> Self {
        Self { t: 0.0, pos, vel: [Vec2::ZERO; 3] }
    }

    /// Layout `[x1x, x1y, x2x, x2y, x3x, x3y, v1x, ..., v3y]`.
    pub fn to_array(&self) -> [f64; 12] {
        let mut y = [0.0; 12];
        for k in 0..3 {
            y[2 * k] = self.pos[k].x;
            y[2 * k + 1] = self.pos[k].y;
            y[6 + 2 * k] = self.vel[k].x;
            y[6 + 2 * k + 1] = self.vel[k].y;
        }
        y
    }

    pub fn from_array(t: f64, y: &[f64; 12]) -> Self {
        let pos = [0, 1, 2].map(|k| Vec2::new(y[2 * k], y[2 * k + 1]));
        let vel = [0, 1, 2].map(|k| Vec2::new(y[6 + 2 * k], y[6 + 2 * k + 1]));
        Self { t, pos, vel }
    }

    /// The 13-number flat record `t, positions, velocities`.
    pub fn to_record(&self) -> [f64; 13] {
        let mut r = [0.0; 13];
        r[0] = self.t;
        r[1..].copy_from_slice(&self.to_array());
        r
    }

    pub fn from_record(r: &[f64; 13]) -> Self {
        let mut y = [0.0; 12];
        y.copy_from_slice(&r[1..]);
        Self::from_array(r[0], &y)
    }

    pub fn center_of_mass(&self, m: &MassTriple) -> Vec2 {
        weighted_mean(m, &self.pos)
    }

    pub fn center_of_mass_velocity(&self, m: &MassTriple) -> Vec2 {
        weighted_mean(m, &self.vel)
    }

    pub fn translate(&self, shift: Vec2) -> Self {
        Self { pos: self.pos.map(|p| p + shift), ..*self }
    }

    pub fn scale_positions(&self, factor: f64) -> Self {
        Self { pos: self.pos.map(|p| factor * p), ..*self }
    }

    /// Rotate positions and velocities about the origin.
    pub fn rotate(&self, angle: f64) -> Self {
        Self { t: self.t, pos: self.pos.map(|p| p.rotate(angle)), vel: self.vel.map(|v| v.rotate(angle)) }
    }

    /// Relabel bodies: body `k` of the result is body `perm[k]` of `self`.
    pub fn permute(&self, perm: [usize; 3]) -> Self {
        Self { t: self.t, pos: perm.map(|k| self.pos[k]), vel: perm.map(|k| self.vel[k]) }
    }
}

fn weighted_mean(m: &MassTriple, v: &[Vec2; 3]) -> Vec2 {
    let masses = m.masses();
    let sum = (0..3).fold(Vec2::ZERO, |acc, k| acc + masses[k] * v[k]);
    (1.0 / m.total()) * sum
}

/// All scalar invariants of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleInvariants {
    pub s: [f64; 3],
    pub delta: f64,
    pub i1: f64,
    pub i: f64,
    pub u: f64,
    pub z: f64,
}

pub fn squared_sides(pos: &[Vec2; 3]) -> [f64; 3] {
    [(pos[1] - pos[2]).norm2(), (pos[2] - pos[0]).norm2(), (pos[0] - pos[1]).norm2()]
}

pub fn signed_area(pos: &[Vec2; 3]) -> f64 {
    0.5 * (pos[1] - pos[0]).cross(pos[2] - pos[0])
}

/// Unit-mass moment `I1 = (s1 + s2 + s3) / 3`.
pub fn unit_moment(s: &[f64; 3]) -> f64 {
    (s[0] + s[1] + s[2]) / 3.0
}

/// Mass moment of inertia about the center of mass, `I = sum p_k s_k`.
pub fn moment_of_inertia(m: &MassTriple, s: &[f64; 3]) -> f64 {
    let p = m.p();
    p[0] * s[0] + p[1] * s[1] + p[2] * s[2]
}

/// Normalized signed area `(4/sqrt 3) Delta / I1`.
pub fn normalized_area(delta: f64, i1: f64) -> f64 {
    4.0 / 3f64.sqrt() * delta / i1
}

/// Negative potential `U = sum m_i m_j / r_ij` from squared sides.
pub fn potential(m: &MassTriple, s: &[f64; 3]) -> Result<f64> {
    let i1 = unit_moment(s);
    if let Some(k) = (0..3).find(|&k| !(s[k] > COLLISION_REL * i1)) {
        return Err(Error::Collision { side: k + 1, value: s[k] });
    }
    let pair = pair_products(m);
    Ok((0..3).map(|k| pair[k] / s[k].sqrt()).sum())
}

/// `m_i m_j` for the pair opposite body `k`.
pub(crate) fn pair_products(m: &MassTriple) -> [f64; 3] {
    let [m1, m2, m3] = m.masses();
    [m2 * m3, m3 * m1, m1 * m2]
}

pub fn invariants(m: &MassTriple, state: &BodyState) -> Result<TriangleInvariants> {
    let s = squared_sides(&state.pos);
    let delta = signed_area(&state.pos);
    let i1 = unit_moment(&s);
    let u = potential(m, &s)?;
    Ok(TriangleInvariants { s, delta, i1, i: moment_of_inertia(m, &s), u, z: normalized_area(delta, i1) })
}

/// `K = sum m_k |v_k|^2`, twice the kinetic energy.
pub fn kinetic(m: &MassTriple, state: &BodyState) -> f64 {
    let masses = m.masses();
    (0..3).map(|k| masses[k] * state.vel[k].norm2()).sum()
}

pub fn angular_momentum(m: &MassTriple, state: &BodyState) -> f64 {
    let masses = m.masses();
    (0..3).map(|k| masses[k] * state.pos[k].cross(state.vel[k])).sum()
}

pub fn linear_momentum(m: &MassTriple, state: &BodyState) -> Vec2 {
    let masses = m.masses();
    (0..3).fold(Vec2::ZERO, |acc, k| acc + masses[k] * state.vel[k])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    /// `K/2 - U`.
    pub energy: f64,
    pub angular_momentum: f64,
    pub momentum: Vec2,
}

pub fn conserved(m: &MassTriple, state: &BodyState) -> Result<Conserved> {
    let inv = invariants(m, state)?;
    Ok(Conserved {
        energy: 0.5 * kinetic(m, state) - inv.u,
        angular_momentum: angular_momentum(m, state),
        momentum: linear_momentum(m, state),
    })
}

/// Move to the center-of-mass frame and strip the rigid-rotation part of the
/// velocities so that the result has `P = 0` and `J = 0`.
pub fn center_and_project(m: &MassTriple, state: &BodyState) -> Result<BodyState> {
    let com = state.center_of_mass(m);
    let vcom = state.center_of_mass_velocity(m);
    let pos = state.pos.map(|p| p - com);
    let vel = state.vel.map(|v| v - vcom);
    let masses = m.masses();
    let inertia: f64 = (0..3).map(|k| masses[k] * pos[k].norm2()).sum();
    if !(inertia > 0.0) {
        return Err(Error::Degenerate("triple collision: I = 0".into()));
    }
    let j: f64 = (0..3).map(|k| masses[k] * pos[k].cross(vel[k])).sum();
    let omega = j / inertia;
    let vel = [0, 1, 2].map(|k| vel[k] - omega * pos[k].perp());
    Ok(BodyState { t: state.t, pos, vel })
}

/// Jacobi coordinates read as complex numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiPair {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl JacobiPair {
    pub fn norm2(&self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }
}

fn to_complex(v: Vec2) -> Complex64 {
    Complex64::new(v.x, v.y)
}

fn jacobi_of(m: &MassTriple, v: &[Vec2; 3]) -> JacobiPair {
    let [m1, m2, _] = m.masses();
    let pair_com = (1.0 / (m1 + m2)) * (m1 * v[0] + m2 * v[1]);
    JacobiPair {
        z1: m.mu1().sqrt() * to_complex(v[1] - v[0]),
        z2: m.mu2().sqrt() * to_complex(v[2] - pair_com),
    }
}

/// `z1 = sqrt(mu1)(x2 - x1)`, `z2 = sqrt(mu2)(x3 - (m1 x1 + m2 x2)/(m1 + m2))`.
pub fn jacobi_map(m: &MassTriple, state: &BodyState) -> JacobiPair {
    jacobi_of(m, &state.pos)
}

/// The same linear map applied to the velocities.
pub fn jacobi_velocity(m: &MassTriple, state: &BodyState) -> JacobiPair {
    jacobi_of(m, &state.vel)
}

/// Inverse of the Jacobi map on centered configurations.
pub fn jacobi_inverse(m: &MassTriple, pair: &JacobiPair) -> [Vec2; 3] {
    let [m1, m2, _] = m.masses();
    let d1 = (1.0 / m.mu1().sqrt()) * Vec2::new(pair.z1.re, pair.z1.im);
    let d2 = (1.0 / m.mu2().sqrt()) * Vec2::new(pair.z2.re, pair.z2.im);
    let total = m.total();
    let pair_com = -(m.masses()[2] / total) * d2;
    let x3 = ((m1 + m2) / total) * d2;
    let x1 = pair_com - (m2 / (m1 + m2)) * d1;
    let x2 = pair_com + (m1 / (m1 + m2)) * d1;
    [x1, x2, x3]
}
