//! Geometry of the shape sphere.
//!
//! Coordinates `(phi, theta)` are the spherical coordinates of the
//! equal-mass Hopf vector, whatever the active masses: `phi` is the latitude
//! (zero on the collinear equator, `sin phi = z`) and `theta` the longitude.
//! The binary-collision rays sit on the equator at longitudes
//! `THETA_K = (pi/3, -pi/3, pi)`, and every configuration satisfies
//! `s_k / I1 = 1 - cos(phi) cos(theta - theta_k)`.

use std::f64::consts::{FRAC_PI_3, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangle::{
    self, jacobi_map, jacobi_velocity, pair_products, signed_area, squared_sides, unit_moment, BodyState, JacobiPair,
    MassTriple, TriangleInvariants,
};
use crate::vec2::Vec2;

/// Longitudes of the binary collisions `s_k = 0` on the equator.
pub const THETA_K: [f64; 3] = [FRAC_PI_3, -FRAC_PI_3, PI];

/// Below this `cos(phi)` the longitude and its rate are not reported.
pub const POLE_COS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    /// Moment of inertia for the active masses.
    pub i: f64,
    pub phi: f64,
    pub theta: f64,
}

impl ShapePoint {
    pub fn new(i: f64, phi: f64, theta: f64) -> Self {
        Self { i, phi, theta }
    }

    /// Unit-moment point at `(phi, theta)`.
    pub fn unit(phi: f64, theta: f64) -> Self {
        Self { i: 1.0, phi, theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeVelocity {
    pub idot: f64,
    pub phidot: f64,
    pub thetadot: f64,
}

/// Result of reducing a phase point to shape coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeCoords {
    pub point: ShapePoint,
    /// `phidot` and `thetadot` are NaN when `near_pole` is set.
    pub velocity: ShapeVelocity,
    pub cos_phi: f64,
    pub near_pole: bool,
}

/// `gamma_k(theta) = cos(theta - theta_k)`.
pub fn gamma(theta: f64) -> [f64; 3] {
    THETA_K.map(|tk| (theta - tk).cos())
}

/// Normalized squared sides `s_k / I1`.
pub fn shat(phi: f64, theta: f64) -> [f64; 3] {
    let c = phi.cos();
    gamma(theta).map(|g| 1.0 - c * g)
}

/// `I / I1` as a function on the sphere.
pub fn hat_moment(m: &MassTriple, phi: f64, theta: f64) -> f64 {
    let p = m.p();
    let sh = shat(phi, theta);
    p[0] * sh[0] + p[1] * sh[1] + p[2] * sh[2]
}

/// Quadratic invariants `(w0, w1, w2, w3)` of a pair of complex coordinates.
///
/// Equivalently the Hermitian matrix `H_ij = z_i conj(z_j)`:
/// `w0 = tr H / 2`, `w1 = (H_11 - H_22)/2`, `w2 = Re H_12`, `w3 = -Im H_12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeVector {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl ConeVector {
    pub fn from_jacobi(pair: &JacobiPair) -> Self {
        let a = pair.z1.norm_sqr();
        let b = pair.z2.norm_sqr();
        let cross = pair.z1.conj() * pair.z2;
        Self { w0: 0.5 * (a + b), w1: 0.5 * (a - b), w2: cross.re, w3: cross.im }
    }

    /// Time derivative along `(z, zdot)`.
    pub fn rate(pair: &JacobiPair, rate: &JacobiPair) -> Self {
        let a = 2.0 * (pair.z1.conj() * rate.z1).re;
        let b = 2.0 * (pair.z2.conj() * rate.z2).re;
        let cross = rate.z1.conj() * pair.z2 + pair.z1.conj() * rate.z2;
        Self { w0: 0.5 * (a + b), w1: 0.5 * (a - b), w2: cross.re, w3: cross.im }
    }

    pub fn hermitian(pair: &JacobiPair) -> [[Complex64; 2]; 2] {
        let z = [pair.z1, pair.z2];
        [[z[0] * z[0].conj(), z[0] * z[1].conj()], [z[1] * z[0].conj(), z[1] * z[1].conj()]]
    }

    /// `w0^2 - w1^2 - w2^2 - w3^2`, zero on the image of configurations.
    pub fn minkowski_norm(&self) -> f64 {
        self.w0 * self.w0 - self.w1 * self.w1 - self.w2 * self.w2 - self.w3 * self.w3
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w0, self.w1, self.w2, self.w3]
    }
}

fn equal_masses() -> MassTriple {
    MassTriple::equal()
}

/// Hopf image of a configuration, built from equal-mass Jacobi coordinates.
pub fn cone_embed(state: &BodyState) -> ConeVector {
    ConeVector::from_jacobi(&jacobi_map(&equal_masses(), state))
}

/// Fixed linear change of basis `(w0, w1, w2, w3) -> (s1, s2, s3, Delta)`.
pub fn cone_to_sides(w: &ConeVector) -> ([f64; 3], f64) {
    let s = THETA_K.map(|tk| 2.0 * w.w0 - 2.0 * (w.w1 * tk.cos() + w.w2 * tk.sin()));
    (s, 0.5 * 3f64.sqrt() * w.w3)
}

/// Inverse of [`cone_to_sides`].
pub fn sides_to_cone(s: &[f64; 3], delta: f64) -> ConeVector {
    let w0 = (s[0] + s[1] + s[2]) / 6.0;
    let (mut w1, mut w2) = (0.0, 0.0);
    for k in 0..3 {
        w1 -= s[k] * THETA_K[k].cos() / 3.0;
        w2 -= s[k] * THETA_K[k].sin() / 3.0;
    }
    ConeVector { w0, w1, w2, w3: 2.0 * delta / 3f64.sqrt() }
}

/// `16 Delta^2 - (2 s1 s2 + 2 s2 s3 + 2 s3 s1 - s1^2 - s2^2 - s3^2)`.
pub fn heron_form(s: &[f64; 3], delta: f64) -> f64 {
    let [a, b, c] = *s;
    16.0 * delta * delta - (2.0 * (a * b + b * c + c * a) - (a * a + b * b + c * c))
}

/// Hermitian matrix of the mass-`m` moment of inertia in equal-mass Jacobi
/// coordinates: `I_m(x) = <z, H z>` with `z` the equal-mass Jacobi pair of `x`.
pub fn moment_hermitian(m: &MassTriple) -> [[Complex64; 2]; 2] {
    let eq = equal_masses();
    let quad = |z1: Complex64, z2: Complex64| {
        let pos = triangle::jacobi_inverse(&eq, &JacobiPair { z1, z2 });
        triangle::moment_of_inertia(m, &squared_sides(&pos))
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let h11 = quad(one, zero);
    let h22 = quad(zero, one);
    // <z, H z> = sum conj(z_a) H_ab z_b
    let re = 0.5 * (quad(one, one) - h11 - h22);
    let im = 0.5 * (quad(one, i) - h11 - h22);
    let h12 = Complex64::new(re, im);
    [[Complex64::new(h11, 0.0), h12], [h12.conj(), Complex64::new(h22, 0.0)]]
}

pub fn det2(h: &[[Complex64; 2]; 2]) -> Complex64 {
    h[0][0] * h[1][1] - h[0][1] * h[1][0]
}

/// Reduce a phase point to `(I, phi, theta)` and their rates.
pub fn to_shape(m: &MassTriple, state: &BodyState) -> Result<ShapeCoords> {
    let s = squared_sides(&state.pos);
    let i = triangle::moment_of_inertia(m, &s);
    if !(i > 0.0) {
        return Err(Error::Degenerate("triple collision: I = 0".into()));
    }
    let eq = equal_masses();
    let z = jacobi_map(&eq, state);
    let zdot = jacobi_velocity(&eq, state);
    let w = ConeVector::from_jacobi(&z);
    let wdot = ConeVector::rate(&z, &zdot);

    let rho2 = w.w1 * w.w1 + w.w2 * w.w2;
    let rho = rho2.sqrt();
    let phi = w.w3.atan2(rho);
    let theta = w.w2.atan2(w.w1);
    let cos_phi = rho / w.w0;

    let idot = idot(m, state);
    let zeta_dot = normalized_area_rate(state);
    let near_pole = cos_phi < POLE_COS;
    let (phidot, thetadot) = if near_pole {
        (f64::NAN, f64::NAN)
    } else {
        (zeta_dot / cos_phi, (w.w1 * wdot.w2 - w.w2 * wdot.w1) / rho2)
    };
    Ok(ShapeCoords {
        point: ShapePoint { i, phi, theta },
        velocity: ShapeVelocity { idot, phidot, thetadot },
        cos_phi,
        near_pole,
    })
}

/// `dI/dt` for the active masses.
pub fn idot(m: &MassTriple, state: &BodyState) -> f64 {
    let p = m.p();
    let (x, v) = (&state.pos, &state.vel);
    let pairs = [(1, 2), (2, 0), (0, 1)];
    (0..3)
        .map(|k| {
            let (a, b) = pairs[k];
            2.0 * p[k] * (x[a] - x[b]).dot(v[a] - v[b])
        })
        .sum()
}

/// `dz/dt` by the quotient rule on `(4/sqrt 3) Delta / I1`.
pub fn normalized_area_rate(state: &BodyState) -> f64 {
    let (x, v) = (&state.pos, &state.vel);
    let s = squared_sides(x);
    let i1 = unit_moment(&s);
    let delta = signed_area(x);
    let delta_dot = 0.5 * ((v[1] - v[0]).cross(x[2] - x[0]) + (x[1] - x[0]).cross(v[2] - v[0]));
    let i1_dot = 2.0 / 3.0
        * ((x[1] - x[2]).dot(v[1] - v[2]) + (x[2] - x[0]).dot(v[2] - v[0]) + (x[0] - x[1]).dot(v[0] - v[1]));
    4.0 / 3f64.sqrt() * (delta_dot * i1 - delta * i1_dot) / (i1 * i1)
}

fn check_point(p: &ShapePoint) -> Result<()> {
    if !(p.i > 0.0) || !p.phi.is_finite() || !p.theta.is_finite() {
        return Err(Error::Degenerate(format!("invalid shape point {p:?}")));
    }
    Ok(())
}

/// Squared sides and signed area of the shape `p` at moment `p.i`.
pub fn shape_sides(m: &MassTriple, p: &ShapePoint) -> Result<([f64; 3], f64, f64)> {
    check_point(p)?;
    let i1 = p.i / hat_moment(m, p.phi, p.theta);
    let s = shat(p.phi, p.theta).map(|v| (i1 * v).max(0.0));
    let delta = 0.25 * 3f64.sqrt() * i1 * p.phi.sin();
    Ok((s, delta, i1))
}

pub fn shape_to_invariants(m: &MassTriple, p: &ShapePoint) -> Result<TriangleInvariants> {
    let (s, delta, i1) = shape_sides(m, p)?;
    let u = triangle::potential(m, &s)
        .map_err(|e| Error::Degenerate(format!("binary collision at {p:?}: {e}")))?;
    Ok(TriangleInvariants {
        s,
        delta,
        i1,
        i: p.i,
        u,
        z: triangle::normalized_area(delta, i1),
    })
}

/// A centered configuration at rest whose shape is `p`.
pub fn realize(m: &MassTriple, p: &ShapePoint) -> Result<BodyState> {
    let (s, delta, _) = shape_sides(m, p)?;
    // base on the longest side; cyclic vertex order keeps the sign of Delta
    let k = (0..3).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
    let (a, b, c) = ((k + 1) % 3, (k + 2) % 3, k);
    let base = s[k].sqrt();
    if !(base > 0.0) {
        return Err(Error::Degenerate("triple collision shape".into()));
    }
    let ac2 = s[b];
    let bc2 = s[a];
    let u = (s[k] + ac2 - bc2) / (2.0 * base);
    let mut pos = [Vec2::ZERO; 3];
    pos[a] = Vec2::ZERO;
    pos[b] = Vec2::new(base, 0.0);
    pos[c] = Vec2::new(u, 2.0 * delta / base);
    let st = BodyState::at_rest(pos);
    let com = st.center_of_mass(m);
    Ok(st.translate(-com))
}

/// Conformal factor `lambda = 3 c(m) (I1/I)^2` between the mass-`m` and the
/// equal-mass shape metrics.
pub fn lambda(m: &MassTriple, p: &ShapePoint) -> f64 {
    let h = hat_moment(m, p.phi, p.theta);
    3.0 * m.c() / (h * h)
}

fn p_gamma(m: &MassTriple, theta: f64) -> f64 {
    let p = m.p();
    let g = gamma(theta);
    p[0] * g[0] + p[1] * g[1] + p[2] * g[2]
}

/// `d log(lambda) / d phi` at fixed `I`, `theta`.
pub fn dlog_lambda_dphi(m: &MassTriple, p: &ShapePoint) -> f64 {
    -2.0 * p.phi.sin() * p_gamma(m, p.theta) / hat_moment(m, p.phi, p.theta)
}

pub fn dlambda_dphi(m: &MassTriple, p: &ShapePoint) -> f64 {
    lambda(m, p) * dlog_lambda_dphi(m, p)
}

/// `cot(phi) d log(lambda)/d phi`, continued smoothly through the equator.
pub fn cot_dlog_lambda_dphi(m: &MassTriple, p: &ShapePoint) -> f64 {
    -2.0 * p.phi.cos() * p_gamma(m, p.theta) / hat_moment(m, p.phi, p.theta)
}

/// `U` as a function of `(I, phi, theta)`.
pub fn potential_at(m: &MassTriple, p: &ShapePoint) -> Result<f64> {
    shape_to_invariants(m, p).map(|inv| inv.u)
}

/// `sum_k -(1/2) m_i m_j s_k^{-3/2} ds_k` for a given side variation.
fn potential_variation(m: &MassTriple, p: &ShapePoint, ds: impl Fn(usize, f64, f64) -> f64) -> Result<f64> {
    check_point(p)?;
    let h = hat_moment(m, p.phi, p.theta);
    let i1 = p.i / h;
    let sh = shat(p.phi, p.theta);
    let pair = pair_products(m);
    let mut total = 0.0;
    for k in 0..3 {
        let s = i1 * sh[k];
        if !(s > triangle::COLLISION_REL * i1) {
            return Err(Error::Collision { side: k + 1, value: s });
        }
        total += -0.5 * pair[k] * s.powf(-1.5) * ds(k, i1, h);
    }
    Ok(total)
}

/// `dU/dphi` at fixed `I`, `theta`, via `s_k = I1 shat_k`, `I1 = I / Ihat`.
pub fn du_dphi(m: &MassTriple, p: &ShapePoint) -> Result<f64> {
    let sp = p.phi.sin();
    let g = gamma(p.theta);
    let pg = p_gamma(m, p.theta);
    let sh = shat(p.phi, p.theta);
    potential_variation(m, p, |k, i1, h| {
        // dI1/dphi = -I1 dlog(Ihat)/dphi, dshat_k/dphi = sin(phi) gamma_k
        let dlog_h = sp * pg / h;
        i1 * (sp * g[k] - sh[k] * dlog_h)
    })
}

/// `cot(phi) dU/dphi` with the `sin(phi)` factor cancelled analytically.
pub fn cot_du_dphi(m: &MassTriple, p: &ShapePoint) -> Result<f64> {
    let cp = p.phi.cos();
    let g = gamma(p.theta);
    let pg = p_gamma(m, p.theta);
    let sh = shat(p.phi, p.theta);
    potential_variation(m, p, |k, i1, h| i1 * cp * (g[k] - sh[k] * pg / h))
}

/// Closed form of `1 - (1/2) cot(phi) dlog(lambda)/dphi`.
pub fn ineq1_closed_form(m: &MassTriple, phi: f64, theta: f64) -> f64 {
    m.p().iter().sum::<f64>() / hat_moment(m, phi, theta)
}

/// Circle `A s1 + B s2 + C s3 + D Delta = 0` on the shape sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CircleSpec {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if [a, b, c, d].iter().all(|&v| v == 0.0) {
            return Err(Error::Invalid("circle coefficients are all zero".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// The collinear equator `Delta = 0`.
    pub fn equator() -> Self {
        Self { a: 0.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// The meridian through both Lagrange points and longitude `theta0`.
    pub fn meridian(theta0: f64) -> Self {
        let g = gamma(theta0);
        // orthogonal to (1,1,1) and to gamma(theta0)
        Self { a: g[2] - g[1], b: g[0] - g[2], c: g[1] - g[0], d: 0.0 }
    }

    /// Circle through three shape points (null vector of the 3x4 system).
    pub fn through(points: [(f64, f64); 3]) -> Result<Self> {
        let rows = points.map(|(phi, theta)| {
            let sh = shat(phi, theta);
            [sh[0], sh[1], sh[2], 0.25 * 3f64.sqrt() * phi.sin()]
        });
        let minor = |cols: [usize; 3]| {
            let m = |r: usize, c: usize| rows[r][cols[c]];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        };
        let n = [minor([1, 2, 3]), -minor([0, 2, 3]), minor([0, 1, 3]), -minor([0, 1, 2])];
        let scale = n.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(Error::Degenerate("points do not determine a unique circle".into()));
        }
        CircleSpec::new(n[0] / scale, n[1] / scale, n[2] / scale, n[3] / scale)
    }

    /// Residual at the representative with `I1 = 1`; zero means on the circle.
    pub fn residual(&self, phi: f64, theta: f64) -> f64 {
        let sh = shat(phi, theta);
        self.a * sh[0] + self.b * sh[1] + self.c * sh[2] + self.d * 0.25 * 3f64.sqrt() * phi.sin()
    }
}

pub fn circle_contains(c: &CircleSpec, p: &ShapePoint) -> f64 {
    c.residual(p.phi, p.theta)
}

/// Lower-triangular `L(z1, z2) = (alpha z1, beta z1 + gamma z2)` carrying
/// mass-`m` Jacobi coordinates to mass-`m'` ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intertwiner {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl Intertwiner {
    pub fn new(m: &MassTriple, m_prime: &MassTriple) -> Self {
        let [m1, m2, _] = m.masses();
        let [n1, n2, _] = m_prime.masses();
        let alpha = (m_prime.mu1() / m.mu1()).sqrt();
        let gamma = (m_prime.mu2() / m.mu2()).sqrt();
        let beta = -(m_prime.mu2() / m.mu1()).sqrt() * (m1 / (m1 + m2) - n1 / (n1 + n2));
        Self { alpha: alpha.into(), beta: beta.into(), gamma: gamma.into() }
    }

    pub fn apply(&self, pair: &JacobiPair) -> JacobiPair {
        JacobiPair { z1: self.alpha * pair.z1, z2: self.beta * pair.z1 + self.gamma * pair.z2 }
    }

    pub fn det(&self) -> Complex64 {
        self.alpha * self.gamma
    }
}

pub fn intertwiner(m: &MassTriple, m_prime: &MassTriple) -> Intertwiner {
    Intertwiner::new(m, m_prime)
}

/// Distance between the shapes of two configurations in the mass-`m` shape
/// metric (the quotient of the unit 3-sphere by rotations).
pub fn shape_distance(m: &MassTriple, a: &BodyState, b: &BodyState) -> f64 {
    let za = jacobi_map(m, a);
    let zb = jacobi_map(m, b);
    let wedge = (za.z1 * zb.z2 - za.z2 * zb.z1).norm();
    let inner = (za.z1 * zb.z1.conj() + za.z2 * zb.z2.conj()).norm();
    wedge.atan2(inner)
}

/// Metric ratio `ds_m / ds_m'` measured by central finite differences along
/// `direction = (dphi, dtheta)`, paired with the closed form
/// `sqrt(c(m)/c(m')) I_m' / I_m`.
pub fn conformal_ratio_check(
    m: &MassTriple,
    m_prime: &MassTriple,
    p: &ShapePoint,
    direction: (f64, f64),
) -> Result<(f64, f64)> {
    if p.phi.cos() < 1e-6 {
        return Err(Error::Pole(p.phi.cos()));
    }
    let eps = 1e-5;
    let eq = equal_masses();
    let at = |sign: f64| {
        realize(&eq, &ShapePoint::unit(p.phi + sign * eps * direction.0, p.theta + sign * eps * direction.1))
    };
    let (lo, hi) = (at(-1.0)?, at(1.0)?);
    let numeric = shape_distance(m, &lo, &hi) / shape_distance(m_prime, &lo, &hi);
    let center = realize(&eq, &ShapePoint::unit(p.phi, p.theta))?;
    let s = squared_sides(&center.pos);
    let closed = (m.c() / m_prime.c()).sqrt() * triangle::moment_of_inertia(m_prime, &s)
        / triangle::moment_of_inertia(m, &s);
    Ok((numeric, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn shape_of(pos: [Vec2; 3]) -> ShapeCoords {
        to_shape(&MassTriple::equal(), &BodyState::at_rest(pos)).unwrap()
    }

    #[test]
    fn collision_longitudes() {
        let c12 = shape_of([v(0.0, 0.0), v(0.0, 0.0), v(1.0, 0.3)]);
        assert!(c12.point.phi.abs() < 1e-15);
        assert!((c12.point.theta - PI).abs() < 1e-15);
        let c23 = shape_of([v(-1.0, 0.2), v(0.5, 0.5), v(0.5, 0.5)]);
        assert!((c23.point.theta - FRAC_PI_3).abs() < 1e-14);
        let c13 = shape_of([v(0.4, 0.1), v(-2.0, 1.0), v(0.4, 0.1)]);
        assert!((c13.point.theta + FRAC_PI_3).abs() < 1e-14);
    }

    #[test]
    fn collinear_middle_body_two() {
        let sc = shape_of([v(-1.0, 0.0), v(0.0, 0.0), v(1.0, 0.0)]);
        assert_eq!(sc.point.phi, 0.0);
        assert!((sc.point.theta - 2.0 * FRAC_PI_3).abs() < 1e-15);
        assert!((sc.point.i - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_of_collinear_example() {
        let inv =
            shape_to_invariants(&MassTriple::equal(), &ShapePoint::new(2.0, 0.0, 2.0 * FRAC_PI_3)).unwrap();
        for (a, b) in inv.s.iter().zip([1.0, 4.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(inv.delta, 0.0);
    }

    #[test]
    fn pole_and_collision_shapes() {
        assert_eq!(shat(FRAC_PI_2, 0.3).map(|x| (x - 1.0).abs() < 1e-16), [true; 3]);
        let inv = shape_to_invariants(&MassTriple::equal(), &ShapePoint::unit(FRAC_PI_2, 0.0)).unwrap();
        assert!((inv.z - 1.0).abs() < 1e-15);
        assert!(shat(0.0, PI)[2].abs() < 1e-16);
        assert!(shape_to_invariants(&MassTriple::equal(), &ShapePoint::unit(0.0, PI)).is_err());
    }

    #[test]
    fn equilateral_is_flagged_as_pole() {
        let pos = [v(0.0, 0.0), v(1.0, 0.0), v(0.5, 0.5 * 3f64.sqrt())];
        let st = BodyState::new(0.0, pos, [v(0.1, 0.0), v(0.0, 0.2), v(0.0, 0.0)]);
        let sc = to_shape(&MassTriple::equal(), &st).unwrap();
        assert!(sc.near_pole);
        assert!(sc.velocity.phidot.is_nan());
        assert!((sc.point.phi - FRAC_PI_2).abs() < 1e-7);
    }

    #[test]
    fn lambda_values() {
        let eq = MassTriple::equal();
        for (phi, theta) in [(0.3, 0.1), (-1.0, 2.5), (0.0, -3.0)] {
            assert!((lambda(&eq, &ShapePoint::unit(phi, theta)) - 1.0).abs() < 1e-14);
            assert!(dlog_lambda_dphi(&eq, &ShapePoint::unit(phi, theta)).abs() < 1e-15);
        }
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        assert!((lambda(&m, &ShapePoint::unit(FRAC_PI_2, 0.7)) - 108.0 / 121.0).abs() < 1e-14);
        let a = lambda(&m, &ShapePoint::new(1.0, 0.4, 0.2));
        let b = lambda(&m, &ShapePoint::new(10.0, 0.4, 0.2));
        assert_eq!(a, b);
    }

    #[test]
    fn derivatives_vanish_on_equator() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let p = ShapePoint::new(1.3, 0.0, 0.4);
        assert_eq!(du_dphi(&m, &p).unwrap(), 0.0);
        assert_eq!(dlog_lambda_dphi(&m, &p), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let p = ShapePoint::new(1.0, 0.7, 1.1);
        let h = 1e-5;
        let at = |dphi: f64| ShapePoint { phi: p.phi + dphi, ..p };
        let fd_lambda = (lambda(&m, &at(h)).ln() - lambda(&m, &at(-h)).ln()) / (2.0 * h);
        let fd_u = (potential_at(&m, &at(h)).unwrap() - potential_at(&m, &at(-h)).unwrap()) / (2.0 * h);
        let an_lambda = dlog_lambda_dphi(&m, &p);
        let an_u = du_dphi(&m, &p).unwrap();
        assert!(((fd_lambda - an_lambda) / an_lambda).abs() < 1e-7, "{fd_lambda} {an_lambda}");
        assert!(((fd_u - an_u) / an_u).abs() < 1e-7, "{fd_u} {an_u}");
        let cot = p.phi.cos() / p.phi.sin();
        assert!((cot_du_dphi(&m, &p).unwrap() - cot * an_u).abs() < 1e-13);
        assert!((cot_dlog_lambda_dphi(&m, &p) - cot * an_lambda).abs() < 1e-13);
    }

    #[test]
    fn cone_vertex_and_pole() {
        let w = cone_embed(&BodyState::at_rest([v(0.3, 0.3); 3]));
        assert_eq!(w.as_array(), [0.0; 4]);
        let a = 2.0;
        let w = cone_embed(&BodyState::at_rest([v(0.0, 0.0), v(a, 0.0), v(0.5 * a, 0.5 * 3f64.sqrt() * a)]));
        assert!(w.w1.abs() < 1e-15 && w.w2.abs() < 1e-14);
        assert!((w.w3 / w.w0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heron_345() {
        assert_eq!(heron_form(&[25.0, 9.0, 16.0], 6.0), 0.0);
        assert_eq!(16.0 * 36.0, 2.0 * (25.0 * 9.0 + 9.0 * 16.0 + 16.0 * 25.0) - (625.0 + 81.0 + 256.0));
    }

    #[test]
    fn cone_basis_change_is_inverse_and_carries_forms() {
        let w = ConeVector { w0: 0.7, w1: -0.2, w2: 0.45, w3: 1.1 };
        let (s, d) = cone_to_sides(&w);
        let back = sides_to_cone(&s, d);
        for (a, b) in w.as_array().iter().zip(back.as_array()) {
            assert!((a - b).abs() < 1e-15);
        }
        // Heron form is -12 times the Minkowski form on every vector
        assert!((heron_form(&s, d) + 12.0 * w.minkowski_norm()).abs() < 1e-13);
    }

    #[test]
    fn circles() {
        let m = CircleSpec::meridian(0.9);
        assert!((m.a + m.b + m.c).abs() < 1e-15 && m.d == 0.0);
        assert!(m.residual(FRAC_PI_2, 0.0).abs() < 1e-15);
        assert!(m.residual(-FRAC_PI_2, 2.0).abs() < 1e-15);
        assert!(m.residual(0.4, 0.9).abs() < 1e-15);
        assert!(m.residual(-1.1, 0.9 + PI).abs() < 1e-15);
        assert!(m.residual(0.4, 1.5).abs() > 1e-3);
        let eq = CircleSpec::equator();
        assert_eq!(eq.residual(0.0, 1.234), 0.0);
        assert!(eq.residual(0.2, 1.234) > 0.0);
        assert!(CircleSpec::new(0.0, 0.0, 0.0, 0.0).is_err());
        let pts = [(0.3, 0.2), (-0.7, 1.9), (1.1, -2.4)];
        let c = CircleSpec::through(pts).unwrap();
        for (phi, theta) in pts {
            assert!(c.residual(phi, theta).abs() < 1e-10);
        }
    }

    #[test]
    fn intertwiner_identity_and_det() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let l = intertwiner(&m, &m);
        assert_eq!(l.alpha, Complex64::new(1.0, 0.0));
        assert_eq!(l.beta, Complex64::new(0.0, 0.0));
        assert_eq!(l.det(), Complex64::new(1.0, 0.0));
        let l = intertwiner(&m, &MassTriple::equal());
        assert!((l.det().norm_sqr() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn moment_hermitian_determinant() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let h = moment_hermitian(&m);
        assert!((det2(&h).re - 3.0 * m.c()).abs() < 1e-13);
        let e = moment_hermitian(&MassTriple::equal());
        assert!((e[0][0].re - 1.0).abs() < 1e-14 && (e[1][1].re - 1.0).abs() < 1e-14 && e[0][1].norm() < 1e-14);
    }

    #[test]
    fn conformal_ratio_same_masses() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let (num, closed) = conformal_ratio_check(&m, &m, &ShapePoint::unit(0.3, 0.8), (1.0, 0.5)).unwrap();
        assert_eq!(num, 1.0);
        assert!((closed - 1.0).abs() < 1e-15);
        let eq = MassTriple::equal();
        let (num, _) = conformal_ratio_check(&eq, &eq, &ShapePoint::new(7.0, -0.3, 2.0), (0.2, 1.0)).unwrap();
        assert_eq!(num, 1.0);
        assert!(conformal_ratio_check(&m, &eq, &ShapePoint::unit(FRAC_PI_2, 0.0), (1.0, 0.0)).is_err());
    }
}
