//! The theta field on the hole boundary and its Dirichlet/Robin/Neumann split.
//!
//! Boundary conditions are written `sin(pi theta/2) du/dn + cos(pi theta/2) u = 0`,
//! so `theta = 0` is Dirichlet, `theta = 1` Neumann and anything in between a
//! Robin condition `du/dn + cot(pi theta/2) u = 0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{FaceSide, Grid};
use crate::scalar::Real;

/// `cot(pi theta / 2)`, with the Dirichlet end kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RobinCoefficient<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> RobinCoefficient<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            RobinCoefficient::Finite(b) => Some(b),
            RobinCoefficient::Infinite => None,
        }
    }
}

pub fn robin_coefficient<T: Real>(theta: T) -> Result<RobinCoefficient<T>> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta.to_f64_lossy(),
            range: "[0, 1]",
        });
    }
    if theta == T::zero() {
        Ok(RobinCoefficient::Infinite)
    } else if theta == T::one() {
        Ok(RobinCoefficient::Finite(T::zero()))
    } else {
        let angle = T::FRAC_PI_2() * theta;
        Ok(RobinCoefficient::Finite(angle.cos() / angle.sin()))
    }
}

/// Named analytic theta profiles evaluated at boundary positions.
pub type ThetaFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

#[derive(Clone)]
pub enum ThetaExpr<T> {
    /// `mean + amplitude * sin(harmonic * atan2(x_2, x_1))`.
    Angular {
        mean: T,
        amplitude: T,
        harmonic: i32,
    },
    /// `base + slope * x_axis`.
    Linear {
        axis: usize,
        base: T,
        slope: T,
    },
    Custom(ThetaFn<T>),
}

impl<T: Real> ThetaExpr<T> {
    pub fn eval(&self, x: &[T]) -> T {
        match self {
            ThetaExpr::Angular {
                mean,
                amplitude,
                harmonic,
            } => {
                let angle = if x.len() >= 2 {
                    x[1].atan2(x[0])
                } else {
                    T::zero()
                };
                *mean + *amplitude * (T::from_i64_lossy(i64::from(*harmonic)) * angle).sin()
            }
            ThetaExpr::Linear { axis, base, slope } => {
                *base + *slope * x.get(*axis).copied().unwrap_or_else(T::zero)
            }
            ThetaExpr::Custom(f) => f(x),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for ThetaExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaExpr::Angular {
                mean,
                amplitude,
                harmonic,
            } => write!(f, "Angular({mean:?} + {amplitude:?} sin({harmonic} phi))"),
            ThetaExpr::Linear { axis, base, slope } => {
                write!(f, "Linear({base:?} + {slope:?} x_{axis})")
            }
            ThetaExpr::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ThetaField<T> {
    Constant(T),
    Sampled(ThetaExpr<T>),
}

impl<T: Real> ThetaField<T> {
    pub fn at(&self, x: &[T]) -> T {
        match self {
            ThetaField::Constant(t) => *t,
            ThetaField::Sampled(e) => e.eval(x),
        }
    }
}

/// Condition on the artificial outer boundary. Robin is never used there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OuterCondition {
    /// `u = 1`: the far-field surrogate for profile runs.
    FixedOne,
    Dirichlet0,
    Neumann0,
}

impl OuterCondition {
    pub fn fixed_value<T: Real>(self) -> Option<T> {
        match self {
            OuterCondition::FixedOne => Some(T::one()),
            OuterCondition::Dirichlet0 => Some(T::zero()),
            OuterCondition::Neumann0 => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThetaSpec<T> {
    /// One entry per hole component, in the grid's component order.
    pub components: Vec<ThetaField<T>>,
    pub outer: OuterCondition,
}

impl<T: Real> ThetaSpec<T> {
    pub fn constant(theta: T, outer: OuterCondition) -> Self {
        Self {
            components: vec![ThetaField::Constant(theta)],
            outer,
        }
    }

    pub fn with_outer(&self, outer: OuterCondition) -> Self {
        Self {
            components: self.components.clone(),
            outer,
        }
    }

    /// The theta value when every component is the same constant.
    pub fn uniform_constant(&self) -> Option<T> {
        let mut it = self.components.iter();
        let ThetaField::Constant(first) = it.next()? else {
            return None;
        };
        it.all(|c| matches!(c, ThetaField::Constant(t) if t == first))
            .then_some(*first)
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| match c {
                ThetaField::Constant(t) => format!("{t}"),
                ThetaField::Sampled(e) => format!("{e:?}"),
            })
            .collect();
        format!("theta=[{}], outer={:?}", parts.join(", "), self.outer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceClass {
    Dirichlet,
    Robin,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceCondition<T> {
    Hole {
        class: FaceClass,
        theta: T,
        /// `cot(pi theta/2)` for Robin faces, zero otherwise.
        robin: T,
    },
    Outer(OuterCondition),
}

/// Per-face conditions, aligned with [`Grid::faces`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    conditions: Vec<FaceCondition<T>>,
    outer: OuterCondition,
}

impl<T: Real> BoundaryData<T> {
    pub fn conditions(&self) -> &[FaceCondition<T>] {
        &self.conditions
    }

    pub fn outer(&self) -> OuterCondition {
        self.outer
    }

    pub fn face_count(&self) -> usize {
        self.conditions.len()
    }

    pub fn count(&self, class: FaceClass) -> usize {
        self.conditions
            .iter()
            .filter(|c| matches!(c, FaceCondition::Hole { class: k, .. } if *k == class))
            .count()
    }

    /// Copy with the outer condition replaced.
    pub fn with_outer(&self, outer: OuterCondition) -> Self {
        Self {
            conditions: self
                .conditions
                .iter()
                .map(|c| match c {
                    FaceCondition::Outer(_) => FaceCondition::Outer(outer),
                    hole => *hole,
                })
                .collect(),
            outer,
        }
    }
}

pub fn classify_boundary<T: Real>(grid: &Grid<T>, theta: &ThetaSpec<T>) -> Result<BoundaryData<T>> {
    if theta.components.len() < grid.hole_components() {
        return Err(Error::MissingComponent {
            component: theta.components.len(),
            available: theta.components.len(),
        });
    }
    let mut has_zero = vec![false; grid.hole_components()];
    let mut has_positive = vec![false; grid.hole_components()];
    let mut conditions = Vec::with_capacity(grid.faces().len());
    for face in grid.faces() {
        let condition = match face.side {
            FaceSide::Outer => FaceCondition::Outer(theta.outer),
            FaceSide::Hole { component } => {
                let value = theta.components[component].at(&face.midpoint);
                let (class, robin) = match robin_coefficient(value)? {
                    RobinCoefficient::Infinite => (FaceClass::Dirichlet, T::zero()),
                    RobinCoefficient::Finite(b) if value == T::one() => (FaceClass::Neumann, b),
                    RobinCoefficient::Finite(b) => (FaceClass::Robin, b),
                };
                if class == FaceClass::Dirichlet {
                    has_zero[component] = true;
                } else {
                    has_positive[component] = true;
                }
                FaceCondition::Hole {
                    class,
                    theta: value,
                    robin,
                }
            }
        };
        conditions.push(condition);
    }
    if let Some(component) = (0..grid.hole_components()).find(|&c| has_zero[c] && has_positive[c]) {
        return Err(Error::MixedDirichlet { component });
    }
    Ok(BoundaryData {
        conditions,
        outer: theta.outer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec, Hole};

    #[test]
    fn robin_coefficient_values() {
        assert_eq!(
            robin_coefficient(1.0).unwrap(),
            RobinCoefficient::Finite(0.0)
        );
        let half = robin_coefficient(0.5f64).unwrap().finite().unwrap();
        assert!((half - 1.0).abs() < 1e-15);
        assert_eq!(robin_coefficient(0.0).unwrap(), RobinCoefficient::Infinite);
        assert!(matches!(
            robin_coefficient(1.5),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            robin_coefficient(-0.1),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            robin_coefficient(f64::NAN),
            Err(Error::OutOfRange { .. })
        ));
    }

    fn circle_grid() -> Grid<f64> {
        build_grid(&DomainSpec::cartesian(
            2,
            Hole::Ball { radius: 1.0 },
            3.0,
            0.25,
        ))
        .unwrap()
    }

    #[test]
    fn constant_theta_classes() {
        let grid = circle_grid();
        let d = classify_boundary(&grid, &ThetaSpec::constant(0.0, OuterCondition::Dirichlet0))
            .unwrap();
        assert_eq!(d.count(FaceClass::Dirichlet), grid.hole_faces().count());
        let n =
            classify_boundary(&grid, &ThetaSpec::constant(1.0, OuterCondition::Neumann0)).unwrap();
        assert_eq!(n.count(FaceClass::Neumann), grid.hole_faces().count());
        for c in n.conditions() {
            if let FaceCondition::Hole { robin, .. } = c {
                assert_eq!(*robin, 0.0);
            }
        }
    }

    #[test]
    fn sampled_theta_evaluated_at_midpoints() {
        let grid = circle_grid();
        let spec = ThetaSpec {
            components: vec![ThetaField::Sampled(ThetaExpr::Angular {
                mean: 0.5,
                amplitude: 0.4,
                harmonic: 1,
            })],
            outer: OuterCondition::Dirichlet0,
        };
        let data = classify_boundary(&grid, &spec).unwrap();
        assert_eq!(data.count(FaceClass::Robin), grid.hole_faces().count());
        for (face, cond) in grid.faces().iter().zip(data.conditions()) {
            if let FaceCondition::Hole { robin, theta, .. } = cond {
                let phi = face.midpoint[1].atan2(face.midpoint[0]);
                let t = 0.5 + 0.4 * phi.sin();
                assert!((theta - t).abs() < 1e-15);
                let oracle = 1.0 / (std::f64::consts::FRAC_PI_2 * t).tan();
                assert!((robin - oracle).abs() < 1e-12 * oracle.max(1.0));
            }
        }
    }

    #[test]
    fn mixed_dirichlet_and_missing_component_rejected() {
        let grid = circle_grid();
        let spec = ThetaSpec {
            components: vec![ThetaField::Sampled(ThetaExpr::Linear {
                axis: 0,
                base: 0.0,
                slope: 1.0,
            })],
            outer: OuterCondition::Dirichlet0,
        };
        // Negative x gives theta < 0 which is out of range; clamp the expression instead.
        let clamped = ThetaSpec {
            components: vec![ThetaField::Sampled(ThetaExpr::Custom(Arc::new(
                |x: &[f64]| x[0].clamp(0.0, 1.0),
            )))],
            outer: OuterCondition::Dirichlet0,
        };
        assert!(matches!(
            classify_boundary(&grid, &spec),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            classify_boundary(&grid, &clamped),
            Err(Error::MixedDirichlet { component: 0 })
        ));
        let none = ThetaSpec::<f64> {
            components: vec![],
            outer: OuterCondition::Dirichlet0,
        };
        assert!(matches!(
            classify_boundary(&grid, &none),
            Err(Error::MissingComponent { .. })
        ));
    }

    #[test]
    fn robin_coefficient_decreases_with_theta() {
        let grid = circle_grid();
        let lo = classify_boundary(&grid, &ThetaSpec::constant(0.3, OuterCondition::Dirichlet0))
            .unwrap();
        let hi = classify_boundary(&grid, &ThetaSpec::constant(0.6, OuterCondition::Dirichlet0))
            .unwrap();
        for (a, b) in lo.conditions().iter().zip(hi.conditions()) {
            if let (FaceCondition::Hole { robin: ra, .. }, FaceCondition::Hole { robin: rb, .. }) =
                (a, b)
            {
                assert!(ra >= rb);
            }
        }
    }
}
