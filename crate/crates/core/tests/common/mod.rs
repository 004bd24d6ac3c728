//! Independent oracles. Nothing here calls into the crate's own derivative,
//! angle or quadrature code.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `(E, a, b, x0)` drawn once, uniformly, with `a` in [0.5, 3] and `b` in [-2, 2].
pub const MICROSTATES: [(f64, f64, f64, f64); 5] = [
    (0.5, 2.0, 0.5, 0.0),
    (0.8, 0.62, -1.37, 0.4),
    (1.3, 2.71, 1.08, -1.1),
    (0.35, 1.44, -0.23, 2.0),
    (2.0, 0.93, 1.86, 0.0),
];

pub fn wavenumber(energy: f64) -> f64 {
    (2.0 * energy).sqrt()
}

/// Free-particle `S0` (hbar = m = 1) by tracking the angle of
/// `(cos u, a sin u + b cos u)` in small increments from `u = 0`.
pub fn s0_tracked(energy: f64, a: f64, b: f64, x0: f64, x: f64) -> f64 {
    let u_end = wavenumber(energy) * (x - x0);
    let steps = (u_end.abs() / 0.05).ceil().max(1.0) as usize;
    let angle = |u: f64| (a * u.sin() + b * u.cos()).atan2(u.cos());
    let mut total = b.atan();
    let mut prev = angle(0.0);
    for i in 1..=steps {
        let u = u_end * i as f64 / steps as f64;
        let cur = angle(u);
        let mut d = cur - prev;
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = cur;
    }
    total
}

/// `dS0/dx` written out directly from the quotient rule.
pub fn momentum(energy: f64, a: f64, b: f64, x0: f64, x: f64) -> f64 {
    let k = wavenumber(energy);
    let u = k * (x - x0);
    let g = a * u.sin() + b * u.cos();
    a * k / (u.cos().powi(2) + g * g)
}

/// Central difference refined by two levels of Richardson extrapolation.
pub fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let (d1, d2, d3) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Jacobi time by differencing the tracked action in energy.
pub fn time_oracle(energy: f64, a: f64, b: f64, x0: f64, x: f64) -> f64 {
    richardson(|e| s0_tracked(e, a, b, x0, x), energy, 1e-3 * energy)
}

/// Group velocity as the inverse of the energy derivative of the momentum.
pub fn group_velocity_oracle(energy: f64, a: f64, b: f64, x0: f64, x: f64) -> f64 {
    1.0 / richardson(|e| momentum(e, a, b, x0, x), energy, 1e-3 * energy)
}

/// Composite Simpson rule on `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
