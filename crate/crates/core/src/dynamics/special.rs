//! Closed-form initial conditions for the equilateral solutions.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::triangle::{BodyState, MassTriple};
use crate::vec2::Vec2;

/// Counter-clockwise equilateral triangle of side `a`, centered at the
/// center of mass.
fn equilateral(m: &MassTriple, a: f64) -> BodyState {
    let h = 0.5 * 3f64.sqrt() * a;
    let st = BodyState::at_rest([Vec2::new(0.0, 0.0), Vec2::new(a, 0.0), Vec2::new(0.5 * a, h)]);
    let com = st.center_of_mass(m);
    st.translate(-com)
}

/// Equilateral configuration with moment of inertia `size` and purely
/// radial velocities `v_i = rate * x_i`.
pub fn lagrange_homothety_ic(m: &MassTriple, size: f64, rate: f64) -> Result<BodyState> {
    if !(size > 0.0) || !rate.is_finite() {
        return Err(Error::Invalid(format!("homothety needs size > 0 and finite rate, got {size}, {rate}")));
    }
    let a = (size / m.p().iter().sum::<f64>()).sqrt();
    let mut st = equilateral(m, a);
    st.vel = st.pos.map(|x| x * rate);
    Ok(st)
}

/// Rigidly rotating equilateral configuration of side `a` with
/// `omega^2 = M / a^3`.
pub fn lagrange_circular_ic(m: &MassTriple, a: f64) -> Result<BodyState> {
    lagrange_circular_state::<f64>(m, a).map(|y| BodyState::from_array(0.0, &y))
}

/// [`lagrange_circular_ic`] evaluated entirely in the scalar type `T`, as a
/// phase array (positions then velocities). With extended precision the
/// state lies on the rotating equilateral family to that precision.
pub fn lagrange_circular_state<T: Float>(m: &MassTriple, a: f64) -> Result<[T; 12]> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Invalid(format!("side must be positive, got {a}")));
    }
    let lift = |v: f64| T::from(v).expect("f64 converts");
    let ms = m.masses().map(lift);
    let total = ms[0] + ms[1] + ms[2];
    let a = lift(a);
    let half = lift(0.5);
    let pos = [(T::zero(), T::zero()), (a, T::zero()), (half * a, half * lift(3.0).sqrt() * a)];
    let cx = (ms[0] * pos[0].0 + ms[1] * pos[1].0 + ms[2] * pos[2].0) / total;
    let cy = (ms[0] * pos[0].1 + ms[1] * pos[1].1 + ms[2] * pos[2].1) / total;
    let omega = (total / (a * a * a)).sqrt();
    let mut y = [T::zero(); 12];
    for (k, &(px, py)) in pos.iter().enumerate() {
        let (x, yy) = (px - cx, py - cy);
        y[2 * k] = x;
        y[2 * k + 1] = yy;
        y[6 + 2 * k] = -omega * yy;
        y[7 + 2 * k] = omega * x;
    }
    Ok(y)
}

/// Angular velocity of the rotating equilateral solution with side `a`.
pub fn lagrange_angular_velocity(m: &MassTriple, a: f64) -> f64 {
    (m.total() / a.powi(3)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::nbody::acceleration;
    use crate::triangle::{angular_momentum, invariants, linear_momentum};

    #[test]
    fn circular_equal_masses_unit_side() {
        let m = MassTriple::equal();
        let st = lagrange_circular_ic(&m, 1.0).unwrap();
        assert!((lagrange_angular_velocity(&m, 1.0) - 3f64.sqrt()).abs() < 1e-15);
        let acc = acceleration(&m, &st.pos).unwrap();
        let omega2 = 3.0;
        for k in 0..3 {
            assert!((acc[k] + st.pos[k] * omega2).norm() < 1e-12);
        }
        assert!(angular_momentum(&m, &st) > 0.0);
    }

    #[test]
    fn circular_unequal_masses_is_relative_equilibrium() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        let st = lagrange_circular_ic(&m, 1.3).unwrap();
        let omega2 = m.total() / 1.3f64.powi(3);
        let acc = acceleration(&m, &st.pos).unwrap();
        for k in 0..3 {
            assert!((acc[k] + st.pos[k] * omega2).norm() < 1e-12);
        }
        assert!(linear_momentum(&m, &st).norm() < 1e-14);
    }

    #[test]
    fn homothety_has_zero_angular_momentum_and_requested_size() {
        let m = MassTriple::new(1.0, 2.0, 3.0).unwrap();
        for rate in [0.0, -0.3] {
            let st = lagrange_homothety_ic(&m, 2.5, rate).unwrap();
            assert!(angular_momentum(&m, &st).abs() < 1e-15);
            let inv = invariants(&m, &st).unwrap();
            assert!((inv.i - 2.5).abs() < 1e-14);
            assert!((inv.z - 1.0).abs() < 1e-15);
        }
        assert!(lagrange_homothety_ic(&m, 0.0, 0.0).is_err());
    }
}
