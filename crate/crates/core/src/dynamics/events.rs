//! Location of collinear instants (zeros of the normalized area) along a
//! trajectory.

use serde::{Deserialize, Serialize};

use crate::eclipse::{classify, EclipseEvent};
use crate::error::{Error, Result};
use crate::shape::normalized_area_rate;
use crate::triangle::{normalized_area, signed_area, squared_sides, unit_moment, BodyState};

use super::nbody::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    /// Target `|z|` at a refined crossing.
    pub refine_tol: f64,
    /// A local minimum of `|z|` below this counts as a grazing event.
    pub grazing_tol: f64,
    /// Interior sample points per integrator step used for bracketing.
    pub samples_per_step: usize,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self { refine_tol: 1e-12, grazing_tol: 1e-9, samples_per_step: 8 }
    }
}

/// Root of `f` in `[a, b]` by Brent's method. `f(a)` and `f(b)` must not
/// have the same sign. Stops when `|f| <= ftol` or the bracket collapses.
pub fn find_root(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, ftol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Invalid(format!("root not bracketed: f({a}) = {fa}, f({b}) = {fb}")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let m = 0.5 * (c - b);
        if fb.abs() <= ftol || m.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

/// Minimum of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_minimum(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > 4.0 * f64::EPSILON * (a.abs() + b.abs()) + f64::MIN_POSITIVE {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Zeros of a scalar signal given as samples; returns `(t, grazing)` pairs.
///
/// Sign changes between samples are refined by [`find_root`]. Interior
/// local minima of `|f|` are refined by golden-section search; if the
/// refined minimum crosses zero both roots are reported, otherwise a value
/// below `grazing_tol` is reported as grazing.
pub fn scan_zeros(
    mut f: impl FnMut(f64) -> f64,
    samples: &[(f64, f64)],
    refine_tol: f64,
    grazing_tol: f64,
) -> Result<Vec<(f64, bool)>> {
    let mut out: Vec<(f64, bool)> = Vec::new();
    let push = |t: f64, grazing: bool, out: &mut Vec<(f64, bool)>| {
        if out.last().is_none_or(|&(last, _)| t > last) {
            out.push((t, grazing));
        }
    };
    for i in 0..samples.len() {
        let (t, v) = samples[i];
        if v == 0.0 {
            push(t, false, &mut out);
            continue;
        }
        if i + 1 < samples.len() {
            let (tn, vn) = samples[i + 1];
            if vn != 0.0 && v.signum() != vn.signum() {
                let root = find_root(&mut f, t, tn, refine_tol)?;
                push(root, false, &mut out);
                continue;
            }
        }
        if i > 0 && i + 1 < samples.len() {
            let (tp, vp) = samples[i - 1];
            let (tn, vn) = samples[i + 1];
            let sign = v.signum();
            let same_side = vp.signum() == sign && vn.signum() == sign;
            if same_side && v.abs() <= vp.abs() && v.abs() < vn.abs() {
                let (tm, vm) = golden_minimum(|x| sign * f(x), tp, tn);
                if vm <= 0.0 {
                    // two crossings hidden between samples
                    let r1 = find_root(&mut f, tp, tm, refine_tol)?;
                    let r2 = find_root(&mut f, tm, tn, refine_tol)?;
                    push(r1, false, &mut out);
                    push(r2, false, &mut out);
                } else if vm < grazing_tol {
                    push(tm, true, &mut out);
                }
            }
        }
    }
    Ok(out)
}

fn z_of(state: &BodyState) -> f64 {
    let s = squared_sides(&state.pos);
    normalized_area(signed_area(&state.pos), unit_moment(&s))
}

/// All eclipses of `traj`, in time order.
pub fn detect_eclipses(traj: &Trajectory, cfg: &EventConfig) -> Result<Vec<EclipseEvent>> {
    let n = cfg.samples_per_step.max(2);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(traj.segments.len() * n + 1);
    for seg in &traj.segments {
        for j in 0..n {
            let t = seg.t0 + seg.h * j as f64 / n as f64;
            samples.push((t, z_of(&BodyState::from_array(t, &seg.eval(t)))));
        }
    }
    if let Some(last) = traj.segments.last() {
        samples.push((last.t1(), z_of(&BodyState::from_array(last.t1(), &last.end()))));
    }
    let z_at = |t: f64| traj.state_at(t).map(|s| z_of(&s)).unwrap_or(f64::NAN);
    let zeros = scan_zeros(z_at, &samples, cfg.refine_tol, cfg.grazing_tol)?;
    zeros
        .into_iter()
        .map(|(t, grazing)| {
            let state = traj.state_at(t)?;
            let symbol = classify(&traj.masses, &state)?;
            let rate = normalized_area_rate(&state);
            let direction = if grazing || rate == 0.0 { 0 } else { rate.signum() as i8 };
            Ok(EclipseEvent { t, symbol, direction, grazing, z: z_of(&state) })
        })
        .collect()
}
