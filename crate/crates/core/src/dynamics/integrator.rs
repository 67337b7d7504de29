//! Adaptive explicit Runge-Kutta integration with the Dormand-Prince 8(5,3)
//! pair and its seventh-order continuous extension.
//!
//! The scheme is generic over the floating-point type so that unstable
//! solutions can be followed in double-double arithmetic.

use std::ops::ControlFlow;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::tableau::{A, B, BHH, C, D, E};
use crate::error::{Error, Result};

fn lit<T: Float>(x: f64) -> T {
    T::from(x).expect("f64 literal converts to every scalar type")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on `|h|`; `None` means the whole interval.
    pub h_max: Option<f64>,
    /// Initial step; `None` selects one automatically.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_max: None, h_init: None, max_steps: 20_000_000 }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol >= 0.0
            && self.rtol.is_finite()
            && self.atol.is_finite()
            && self.h_max.is_none_or(|h| h > 0.0)
            && self.h_init.is_none_or(|h| h > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid step control {self:?}")))
        }
    }
}

/// Polynomial interpolant of one accepted step, valid on `[t0, t0 + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment<T, const N: usize> {
    pub t0: T,
    pub h: T,
    coeffs: [[T; N]; 8],
}

impl<T: Float, const N: usize> DenseSegment<T, N> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    pub fn start(&self) -> [T; N] {
        self.coeffs[0]
    }

    pub fn end(&self) -> [T; N] {
        std::array::from_fn(|i| self.coeffs[0][i] + self.coeffs[1][i])
    }

    pub fn contains(&self, t: T) -> bool {
        let (a, b) = if self.h >= T::zero() { (self.t0, self.t1()) } else { (self.t1(), self.t0) };
        t >= a && t <= b
    }

    /// Interpolated state; exact at both ends of the step.
    pub fn eval(&self, t: T) -> [T; N] {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let r = &self.coeffs;
        std::array::from_fn(|i| {
            let mut acc = r[7][i];
            for (k, w) in [(6, s), (5, s1), (4, s), (3, s1), (2, s), (1, s1)] {
                acc = r[k][i] + w * acc;
            }
            r[0][i] + s * acc
        })
    }

    /// The same interpolant rounded to `f64`.
    pub fn to_f64(&self) -> DenseSegment<f64, N> {
        let cast = |x: T| x.to_f64().unwrap_or(f64::NAN);
        DenseSegment { t0: cast(self.t0), h: cast(self.h), coeffs: self.coeffs.map(|row| row.map(cast)) }
    }
}

/// Counters reported after an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    pub stats: StepStats,
    /// True when the observer asked to stop before `t_end`.
    pub interrupted: bool,
}

fn combine<T: Float, const N: usize>(y: &[T; N], h: T, coeffs: &[f64], k: &[[T; N]]) -> [T; N] {
    std::array::from_fn(|i| {
        let mut acc = T::zero();
        for (c, kj) in coeffs.iter().zip(k) {
            if *c != 0.0 {
                acc = acc + lit::<T>(*c) * kj[i];
            }
        }
        y[i] + h * acc
    })
}

fn weighted_rms<T: Float, const N: usize>(v: &[T; N], sc: &[T; N]) -> T {
    let sum = v.iter().zip(sc).fold(T::zero(), |acc, (a, s)| acc + (*a / *s) * (*a / *s));
    (sum / lit(N as f64)).sqrt()
}

fn initial_step<T: Float, const N: usize, F>(rhs: &mut F, t: T, y: &[T; N], f0: &[T; N], dir: T, c: &StepControl, h_max: T) -> T
where
    F: FnMut(T, &[T; N]) -> [T; N],
{
    let sc: [T; N] = std::array::from_fn(|i| lit::<T>(c.atol) + lit::<T>(c.rtol) * y[i].abs());
    let d0 = weighted_rms(y, &sc);
    let d1 = weighted_rms(f0, &sc);
    let small = lit::<T>(1e-10);
    let mut h = if d0 < small || d1 < small { lit(1e-6) } else { lit::<T>(0.01) * d0 / d1 };
    h = h.min(h_max);
    let y1: [T; N] = std::array::from_fn(|i| y[i] + dir * h * f0[i]);
    let f1 = rhs(t + dir * h, &y1);
    let diff: [T; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = weighted_rms(&diff, &sc) / h;
    let der = d1.max(d2);
    let h1 = if der <= lit(1e-15) { lit::<T>(1e-6).max(h * lit(1e-3)) } else { (lit::<T>(0.01) / der).powf(lit(1.0 / 8.0)) };
    (lit::<T>(100.0) * h).min(h1).min(h_max)
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t_end`, handing every accepted
/// step to `observer` as a dense segment. The observer may stop the run.
pub fn integrate<T, const N: usize, F, O>(
    mut rhs: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    control: &StepControl,
    mut observer: O,
) -> Result<Outcome<T, N>>
where
    T: Float,
    F: FnMut(T, &[T; N]) -> [T; N],
    O: FnMut(&DenseSegment<T, N>) -> ControlFlow<()>,
{
    control.validate()?;
    let span = t_end - t0;
    let mut stats = StepStats::default();
    if span == T::zero() {
        return Ok(Outcome { t: t0, y: y0, stats, interrupted: false });
    }
    let dir = span.signum();
    let h_max = control.h_max.map_or(span.abs(), lit).min(span.abs());
    let (rtol, atol) = (lit::<T>(control.rtol), lit::<T>(control.atol));
    let f64_of = |x: T| x.to_f64().unwrap_or(f64::NAN);

    let (mut t, mut y) = (t0, y0);
    let mut k1 = rhs(t, &y);
    stats.evaluations += 1;
    let mut h = match control.h_init {
        Some(h) => lit::<T>(h).min(h_max),
        None => {
            stats.evaluations += 1;
            initial_step(&mut rhs, t, &y, &k1, dir, control, h_max)
        }
    } * dir;

    let mut rejected_last = false;
    let mut k = [[T::zero(); N]; 16];
    let eps = lit::<T>(16.0) * T::epsilon();
    let (fac_min_inv, fac_max_inv, safety) = (lit::<T>(1.0 / 0.333), lit::<T>(1.0 / 6.0), lit::<T>(0.9));

    loop {
        if stats.accepted + stats.rejected >= control.max_steps || h.abs() <= eps * t.abs() || h == T::zero() {
            return Err(Error::Stiffness { t: f64_of(t), h: f64_of(h) });
        }
        let last = (t + lit::<T>(1.01) * h - t_end) * dir >= T::zero();
        if last {
            h = t_end - t;
        }

        k[0] = k1;
        for s in 1..12 {
            let ys = combine(&y, h, A[s - 1], &k[..s]);
            k[s] = rhs(t + lit::<T>(C[s]) * h, &ys);
        }
        stats.evaluations += 11;

        let bsum: [T; N] = combine(&[T::zero(); N], T::one(), &B, &k[..12]);
        let y_new: [T; N] = std::array::from_fn(|i| y[i] + h * bsum[i]);

        let (mut err, mut err2) = (T::zero(), T::zero());
        let e5 = combine(&[T::zero(); N], T::one(), &E[..12], &k[..12]);
        for i in 0..N {
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            let e3 = bsum[i] - lit::<T>(BHH[0]) * k[0][i] - lit::<T>(BHH[1]) * k[8][i] - lit::<T>(BHH[2]) * k[11][i];
            err = err + (e5[i] / sc) * (e5[i] / sc);
            err2 = err2 + (e3 / sc) * (e3 / sc);
        }
        let mut deno = err + lit::<T>(0.01) * err2;
        if deno <= T::zero() {
            deno = T::one();
        }
        let err = h.abs() * err * (T::one() / (deno * lit(N as f64))).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            rejected_last = true;
            h = h * lit(0.2);
            continue;
        }

        let fac11 = err.powf(lit(1.0 / 8.0));
        if err > T::one() {
            stats.rejected += 1;
            rejected_last = true;
            h = h / fac_min_inv.min(fac11 / safety);
            continue;
        }
        let fac = fac_max_inv.max(fac_min_inv.min(fac11 / safety));

        stats.accepted += 1;
        let f_new = rhs(t + h, &y_new);
        k[12] = f_new;
        for s in 13..16 {
            let ys = combine(&y, h, A[s - 1], &k[..s]);
            k[s] = rhs(t + lit::<T>(C[s]) * h, &ys);
        }
        stats.evaluations += 4;

        let mut r = [[T::zero(); N]; 8];
        for i in 0..N {
            let dy = y_new[i] - y[i];
            let bspl = h * k[0][i] - dy;
            r[0][i] = y[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * f_new[i] - bspl;
        }
        for row in 0..4 {
            let dense = combine(&[T::zero(); N], h, &D[row], &k);
            r[4 + row] = dense;
        }
        let segment = DenseSegment { t0: t, h, coeffs: r };

        let mut h_new = h / fac;
        if h_new.abs() > h_max {
            h_new = dir * h_max;
        }
        if rejected_last {
            h_new = dir * h_new.abs().min(h.abs());
        }
        rejected_last = false;

        t = t + h;
        y = y_new;
        k1 = f_new;

        if let ControlFlow::Break(()) = observer(&segment) {
            return Ok(Outcome { t, y, stats, interrupted: true });
        }
        if last {
            return Ok(Outcome { t: t_end, y, stats, interrupted: false });
        }
        h = h_new;
    }
}
