//! Reference values computed independently of the library.
#![allow(dead_code)]

use std::f64::consts::PI;

type RadialFn = Box<dyn Fn(f64) -> f64>;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// `J_0(x) = (1/pi) int_0^pi cos(x sin t) dt`.
pub fn j0_integral(x: f64) -> f64 {
    simpson(|t| (x * t.sin()).cos(), 0.0, PI, 2000) / PI
}

/// `J_0'(x) = -J_1(x) = -(1/pi) int_0^pi cos(t - x sin t) dt`.
pub fn j0_prime(x: f64) -> f64 {
    -simpson(|t| (t - x * t.sin()).cos(), 0.0, PI, 2000) / PI
}

/// First zero of `J_0` by Newton from McMahon's estimate `(3/4) pi`.
pub fn j0_first_zero() -> f64 {
    let mut x = 0.75 * PI;
    for _ in 0..50 {
        let step = j0_integral(x) / j0_prime(x);
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x
}

pub fn ball_eigenvalue(dimension: usize) -> f64 {
    match dimension {
        1 => PI * PI / 4.0,
        2 => j0_first_zero().powi(2),
        3 => PI * PI,
        _ => unreachable!(),
    }
}

/// Radial harmonic function on `[r, R]` with `u = T u'` at `r`, `u(R) = 1`,
/// solved as `u = A + B g(s)` with `g` the fundamental radial solution.
pub fn annulus_profile(n: usize, r: f64, big_r: f64, theta: f64, s: f64) -> f64 {
    let t = (PI * theta / 2.0).tan();
    let (g, dg): (RadialFn, RadialFn) = match n {
        1 => (Box::new(|x| x), Box::new(|_| 1.0)),
        2 => (Box::new(|x: f64| x.ln()), Box::new(|x| 1.0 / x)),
        _ => {
            let p = 2.0 - n as f64;
            (
                Box::new(move |x: f64| x.powf(p)),
                Box::new(move |x: f64| p * x.powf(p - 1.0)),
            )
        }
    };
    // A + B g(r) = T B g'(r);  A + B g(R) = 1.
    let b = 1.0 / (g(big_r) - g(r) + t * dg(r));
    let a = 1.0 - b * g(big_r);
    a + b * g(s)
}

/// `int_a^b omega_3 s^2 (1 - 1/s) ds`, the asymptotic mass of the annulus indicator.
pub fn annulus_mass_3d(a: f64, b: f64) -> f64 {
    simpson(|s| 4.0 * PI * s * s * (1.0 - 1.0 / s), a, b, 1000)
}

#[test]
fn oracle_self_checks() {
    assert!((j0_first_zero() - 2.404_825_557_695_773).abs() < 1e-12);
    assert!((annulus_mass_3d(2.0, 3.0) - 46.0 * PI / 3.0).abs() < 1e-10);
    assert!((annulus_profile(3, 1.0, 2.0, 0.0, 1.5) - 2.0 / 3.0).abs() < 1e-14);
}
