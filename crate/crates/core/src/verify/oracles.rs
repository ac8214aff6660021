//! Reference values used by the verification suite.

use std::f64::consts::PI;

/// `J_0(x)` by its power series; accurate to ~1e-15 for `|x| <= 6`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// First positive zero of `J_0`, bracketed in `[2, 3]`.
pub fn bessel_j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First Dirichlet eigenvalue of the unit ball in dimension 1, 2 or 3.
pub fn ball_eigenvalue(dimension: usize) -> f64 {
    match dimension {
        1 => PI * PI / 4.0,
        2 => bessel_j0_first_zero().powi(2),
        3 => PI * PI,
        _ => f64::NAN,
    }
}

/// `int_{a <= |x| <= b} (1 - 1/(C |x|)) dx` in three dimensions, i.e. the
/// asymptotic mass of the annulus indicator for the exact profile.
pub fn annulus_asymptotic_mass_3d(inner: f64, outer: f64, profile_constant: f64) -> f64 {
    let cube = (outer.powi(3) - inner.powi(3)) / 3.0;
    let square = (outer.powi(2) - inner.powi(2)) / 2.0;
    4.0 * PI * (cube - square / profile_constant)
}
