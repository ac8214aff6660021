//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar used for grids, fields and solvers.
///
/// Blanket-implemented, so `f32` and `f64` both qualify. Tolerances in the
/// solvers are expressed relative to the data, which keeps them meaningful
/// for either width, although the default `1e-10` solver tolerance is only
/// reachable in `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for non-representable values,
    /// which cannot happen for the finite literals used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Area of the unit sphere in `R^N` (`2` for `N = 1`).
pub fn unit_sphere_area<T: Real>(dimension: usize) -> T {
    // Recurrence omega_{N+2} = 2 pi omega_N / N, seeded with omega_1 = 2, omega_2 = 2 pi.
    let two_pi = T::lit(2.0) * T::PI();
    let mut omega = if dimension % 2 == 1 {
        T::lit(2.0)
    } else {
        two_pi
    };
    let mut n = if dimension % 2 == 1 { 1 } else { 2 };
    while n < dimension {
        omega = omega * two_pi / T::from_usize_lossy(n);
        n += 2;
    }
    omega
}

/// `sum_i w_i a_i b_i`.
pub fn weighted_dot<T: Real>(weights: &[T], a: &[T], b: &[T]) -> T {
    debug_assert_eq!(weights.len(), a.len());
    debug_assert_eq!(weights.len(), b.len());
    weights
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&w, (&x, &y))| w * x * y)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area::<f64>(1), 2.0);
        assert!((unit_sphere_area::<f64>(2) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_area::<f64>(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area::<f64>(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area::<f32>(3) - 4.0 * std::f32::consts::PI).abs() < 1e-5);
    }

    #[test]
    fn weighted_dot_matches_manual_sum() {
        let w = [0.5, 1.0, 2.0];
        let a = [1.0, -2.0, 3.0];
        let b = [4.0, 5.0, -1.0];
        assert_eq!(weighted_dot(&w, &a, &b), 0.5 * 4.0 - 10.0 - 6.0);
    }
}
