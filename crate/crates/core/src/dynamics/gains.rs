use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Linear ramp from 0 at `a` to 1 at `b`, clamped outside.
pub fn sat(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidParams(format!("sat needs a < b, got a={a}, b={b}")));
    }
    Ok(ramp(a, b, x))
}

pub(crate) fn ramp(a: f64, b: f64, x: f64) -> f64 {
    if x > b {
        1.0
    } else if x >= a {
        (x - a) / (b - a)
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, `exp(−1/(βx)²)` otherwise.
pub fn theta(beta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let bx = beta * x;
    (-1.0 / (bx * bx)).exp()
}

/// Collision gain for a neighbor at distance `rho` seen at angle `angle`
/// (see [`collision_angle`]).
pub fn psi(rho: f64, angle: f64, big_delta: f64, small_delta: f64) -> Result<f64> {
    if !(0.0 < small_delta && small_delta < big_delta) {
        return Err(Error::InvalidParams(format!(
            "psi needs 0 < delta < Delta, got delta={small_delta}, Delta={big_delta}"
        )));
    }
    if !(0.0..=big_delta).contains(&rho) {
        return Err(Error::InvalidParams(format!(
            "psi distance {rho} outside [0, {big_delta}]"
        )));
    }
    Ok(psi_gain(rho, angle, big_delta, small_delta))
}

pub(crate) fn psi_gain(rho: f64, angle: f64, big_delta: f64, small_delta: f64) -> f64 {
    let approaching = angle < PI;
    if rho > small_delta {
        let r = (rho - small_delta) / (big_delta - small_delta);
        if approaching {
            r
        } else {
            let s = angle.sin();
            r * (1.0 + s) - s
        }
    } else if approaching {
        0.0
    } else {
        -(rho / small_delta) * angle.sin()
    }
}

/// Angle in `[0, 2π)` of `v` measured counter-clockwise from `v_x`, where
/// `u = (g_j − g_i)/|g_j − g_i|` and `v_x = (u_y, −u_x)`. Angles in `[0, π)`
/// mean `v` heads toward `g_j`. A zero `v` maps to `3π/2`.
pub fn collision_angle(gi: Point, gj: Point, v: Point) -> f64 {
    if v == Point::ZERO {
        return 1.5 * PI;
    }
    let u = gj - gi;
    let u = u / u.norm();
    let vx = Point::new(u.y, -u.x);
    let a = v.dot(u).atan2(v.dot(vx));
    if a >= 0.0 {
        a
    } else if a + TAU < TAU {
        a + TAU
    } else {
        0.0
    }
}
