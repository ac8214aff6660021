//! Mass bookkeeping: `m(t) = <u(t), 1>_h`, the asymptotic mass `<u0, Phi>_h`,
//! the conserved functional `<u(t), Phi>_h`, decay fits and the slow-decay
//! construction.

mod decay;
mod eigen;
mod slow_decay;

pub use decay::{fit_decay_exponent, fit_power_law, DecayFit};
pub use eigen::{dirichlet_ball_eigenpair, BallEigenpair};
pub use slow_decay::{slow_decay_construct, Bump, SlowDecayOptions, SlowDecayPlan};

use crate::error::{Error, Result};
use crate::field::{same_grid, Field};
use crate::heat::EvolutionResult;
use crate::profile::ProfileResult;
use crate::scalar::Real;

/// Samples `(t, m(t))` of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MassTrace<T> {
    pub points: Vec<(T, T)>,
    /// Free-form description of the run (dimension, hole, boundary data).
    pub label: String,
}

impl<T: Real> MassTrace<T> {
    pub fn new(points: Vec<(T, T)>, label: impl Into<String>) -> Self {
        Self {
            points,
            label: label.into(),
        }
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn masses(&self) -> impl Iterator<Item = T> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn is_time_ordered(&self) -> bool {
        self.points.windows(2).all(|w| w[1].0 > w[0].0)
    }

    /// Largest increase between consecutive samples.
    pub fn max_increase(&self) -> T {
        self.points
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(T::zero(), T::max)
    }
}

/// `sum_i w_i f_i`.
pub fn mass<T: Real>(f: &Field<T>) -> T {
    f.grid()
        .weights()
        .iter()
        .zip(f.values())
        .map(|(&w, &v)| w * v)
        .sum()
}

/// `<u, phi>_h` where `phi` may live on a larger nested grid.
fn pairing<T: Real>(u: &Field<T>, phi: &Field<T>) -> Result<T> {
    if same_grid(u.grid(), phi.grid()) {
        return u.dot(phi);
    }
    let (ug, pg) = (u.grid(), phi.grid());
    if !ug.is_nested_with(pg) {
        return Err(Error::GridMismatch);
    }
    let mut sum = T::zero();
    for (i, &v) in u.values().iter().enumerate() {
        if v == T::zero() {
            continue;
        }
        let j = pg.node_at(&ug.key(i)).ok_or(Error::GridMismatch)?;
        sum += ug.weight(i) * v * phi.values()[j];
    }
    Ok(sum)
}

/// Largest `|x|` over nodes where `f` is nonzero.
pub fn support_radius<T: Real>(f: &Field<T>) -> T {
    let grid = f.grid();
    f.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != T::zero())
        .map(|(i, _)| grid.radius(i))
        .fold(T::zero(), T::max)
}

/// `<u0, Phi_h>_h`, the limit of the mass as `t -> inf`.
///
/// `u0` may live on any grid nested in the profile's; its support must lie
/// inside the profile's comparison window.
pub fn asymptotic_mass<T: Real>(u0: &Field<T>, profile: &ProfileResult<T>) -> Result<T> {
    let radius = support_radius(u0);
    if radius > profile.window_radius {
        return Err(Error::SupportOutsideWindow {
            radius: radius.to_f64_lossy(),
            window: profile.window_radius.to_f64_lossy(),
        });
    }
    pairing(u0, &profile.phi)
}

/// `(t, <u(t), phi>_h)` over the snapshots, starting with `u0` at `t = 0`.
pub fn conserved_functional<T: Real>(
    u0: &Field<T>,
    evolution: &EvolutionResult<T>,
    phi: &Field<T>,
) -> Result<Vec<(T, T)>> {
    let mut out = Vec::with_capacity(evolution.snapshots.len() + 1);
    out.push((T::zero(), pairing(u0, phi)?));
    for (t, u) in &evolution.snapshots {
        out.push((*t, pairing(u, phi)?));
    }
    Ok(out)
}

/// Largest `|F(t) - F(0)| / |F(0)|` over a series.
pub fn relative_drift<T: Real>(series: &[(T, T)]) -> T {
    let Some(&(_, first)) = series.first() else {
        return T::zero();
    };
    let scale = if first == T::zero() {
        T::one()
    } else {
        first.abs()
    };
    series
        .iter()
        .map(|&(_, v)| (v - first).abs() / scale)
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn mass_examples() {
        let grid = Arc::new(build_grid(&DomainSpec::radial(3, 1.0, 2.0, 0.01)).unwrap());
        let one = Field::constant(grid.clone(), 1.0);
        let exact = 28.0 * PI / 3.0;
        assert!((mass(&one) - exact).abs() / exact < 1e-3);
        assert_eq!(mass(&Field::zeros(grid.clone())), 0.0);
        let d = Field::delta(grid, 17);
        assert!((mass(&d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn drift_of_a_constant_series_is_zero() {
        assert_eq!(relative_drift(&[(0.0, 2.0), (1.0, 2.0)]), 0.0);
        assert!((relative_drift(&[(0.0f64, 2.0), (1.0, 2.2)]) - 0.1).abs() < 1e-12);
    }
}
