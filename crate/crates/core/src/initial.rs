//! Named initial data.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{Backend, Grid};
use crate::mass::dirichlet_ball_eigenpair;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum InitialShape {
    /// `1` on `inner <= |x| <= outer`; cell-averaged on radial grids.
    IndicatorAnnulus { inner: f64, outer: f64 },
    /// `amplitude * exp(-|x - center|^2 / width^2)`.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Unit-mass first Dirichlet eigenfunction of `B(center, radius)`.
    EigenBump { center: Vec<f64>, radius: f64 },
    /// Discrete delta at the node nearest to `point`.
    Delta { point: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl InitialShape {
    /// Radius of a ball around the origin containing the support, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        let norm = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>().sqrt();
        match self {
            InitialShape::IndicatorAnnulus { outer, .. } => Some(*outer),
            InitialShape::GaussianBump { .. } => None,
            InitialShape::EigenBump { center, radius } => Some(norm(center) + radius),
            InitialShape::Delta { point } => Some(norm(point)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialShape::IndicatorAnnulus { .. } => "indicator-annulus",
            InitialShape::GaussianBump { .. } => "gaussian-bump",
            InitialShape::EigenBump { .. } => "eigen-bump",
            InitialShape::Delta { .. } => "delta",
        }
    }

    pub fn sample<T: Real>(&self, grid: &Arc<Grid<T>>) -> Result<Field<T>> {
        let radial = grid.backend() == Backend::Radial;
        let check_center = |c: &[f64]| -> Result<Vec<T>> {
            if c.len() != grid.dimension() {
                return Err(Error::InconsistentInputs(format!(
                    "{} centre has {} coordinates for N = {}",
                    self.name(),
                    c.len(),
                    grid.dimension()
                )));
            }
            if radial && c.iter().any(|&x| x != 0.0) && grid.dimension() > 1 {
                return Err(Error::InconsistentInputs(format!(
                    "{} must be centred at the origin on a radial grid",
                    self.name()
                )));
            }
            Ok(c.iter().map(|&x| T::lit(x)).collect())
        };
        let distance = |i: usize, c: &[T]| -> T {
            let x = grid.coords(i);
            if radial && grid.dimension() > 1 {
                return x[0];
            }
            x.iter()
                .zip(c)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt()
        };
        match self {
            InitialShape::IndicatorAnnulus { inner, outer } => {
                if !(inner < outer) || *inner < 0.0 {
                    return Err(Error::InconsistentInputs(
                        "indicator annulus needs 0 <= inner < outer".into(),
                    ));
                }
                let (a, b) = (T::lit(*inner), T::lit(*outer));
                if radial {
                    let h = grid.spacing();
                    let half = h * T::lit(0.5);
                    let (lo_end, hi_end) = (grid.radius(0), grid.truncation_radius());
                    Ok(Field::from_fn(grid.clone(), |i| {
                        let s = grid.radius(i);
                        let lo = (s - half).max(lo_end);
                        let hi = (s + half).min(hi_end);
                        let overlap = (hi.min(b) - lo.max(a)).max(T::zero());
                        overlap / (hi - lo)
                    }))
                } else {
                    Ok(Field::from_fn(grid.clone(), |i| {
                        let s = grid.radius(i);
                        if s >= a && s <= b {
                            T::one()
                        } else {
                            T::zero()
                        }
                    }))
                }
            }
            InitialShape::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let c = check_center(center)?;
                if !(*width > 0.0) {
                    return Err(Error::OutOfRange {
                        name: "width",
                        value: *width,
                        range: "(0, inf)",
                    });
                }
                let (w, amp) = (T::lit(*width), T::lit(*amplitude));
                Ok(Field::from_fn(grid.clone(), |i| {
                    let d = distance(i, &c) / w;
                    amp * (-d * d).exp()
                }))
            }
            InitialShape::EigenBump { center, radius } => {
                let c = check_center(center)?;
                if !(*radius > 0.0) {
                    return Err(Error::OutOfRange {
                        name: "radius",
                        value: *radius,
                        range: "(0, inf)",
                    });
                }
                let eigen = dirichlet_ball_eigenpair::<T>(grid.dimension(), 1000)?;
                let r = T::lit(*radius);
                let scale = r.powi(grid.dimension() as i32);
                Ok(Field::from_fn(grid.clone(), |i| {
                    eigen.psi_at(distance(i, &c) / r) / scale
                }))
            }
            InitialShape::Delta { point } => {
                let p: Vec<T> = point.iter().map(|&x| T::lit(x)).collect();
                if radial && p.len() != 1 && p.len() != grid.dimension() {
                    return Err(Error::InconsistentInputs(
                        "delta point has the wrong length".into(),
                    ));
                }
                if !radial && p.len() != grid.dimension() {
                    return Err(Error::InconsistentInputs(
                        "delta point has the wrong length".into(),
                    ));
                }
                Ok(Field::delta(grid.clone(), grid.nearest_node(&p)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec, Hole};
    use crate::mass::mass;
    use std::f64::consts::PI;

    #[test]
    fn annulus_indicator_has_the_annulus_volume() {
        let grid = Arc::new(build_grid(&DomainSpec::radial(3, 1.0, 6.0, 0.05)).unwrap());
        let u0 = InitialShape::IndicatorAnnulus {
            inner: 2.0,
            outer: 3.0,
        }
        .sample(&grid)
        .unwrap();
        let exact = 4.0 * PI / 3.0 * (27.0 - 8.0);
        assert!((mass(&u0) - exact).abs() / exact < 1e-3);
        assert_eq!(u0.values()[grid.nearest_node(&[2.0])], 0.5);
    }

    #[test]
    fn eigen_bump_has_unit_mass_on_a_cartesian_grid() {
        let grid = Arc::new(
            build_grid(&DomainSpec::cartesian(
                2,
                Hole::Ball { radius: 1.0 },
                12.0,
                0.1,
            ))
            .unwrap(),
        );
        let u0 = InitialShape::EigenBump {
            center: vec![6.0, 0.0],
            radius: 3.0,
        }
        .sample::<f64>(&grid)
        .unwrap();
        assert!((mass(&u0) - 1.0).abs() < 2e-3, "{}", mass(&u0));
    }

    #[test]
    fn delta_and_validation() {
        let grid = Arc::new(build_grid(&DomainSpec::radial(2, 1.0, 4.0, 0.1)).unwrap());
        let d = InitialShape::Delta { point: vec![2.0] }
            .sample::<f64>(&grid)
            .unwrap();
        assert!((mass(&d) - 1.0).abs() < 1e-14);
        let bad = InitialShape::GaussianBump {
            center: vec![1.0, 0.0],
            width: 1.0,
            amplitude: 1.0,
        };
        assert!(bad.sample::<f64>(&grid).is_err());
    }

    #[test]
    fn shapes_parse_from_json() {
        let s: InitialShape =
            serde_json::from_str(r#"{"shape": "indicator-annulus", "inner": 2, "outer": 3}"#)
                .unwrap();
        assert_eq!(s.support_radius(), Some(3.0));
    }
}
