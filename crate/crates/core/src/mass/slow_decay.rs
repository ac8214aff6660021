use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{Backend, DomainSpec, Grid};
use crate::mass::eigen::{dirichlet_ball_eigenpair, BallEigenpair};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SlowDecayOptions<T> {
    /// Number of bumps `K` in the plan.
    pub bumps: usize,
    pub eigen_resolution: usize,
    /// Largest admissible `|x_n| + R_n`, typically the truncation radius.
    pub max_extent: Option<T>,
}

impl<T> Default for SlowDecayOptions<T> {
    fn default() -> Self {
        Self {
            bumps: 5,
            eigen_resolution: 1000,
            max_extent: None,
        }
    }
}

/// One rescaled eigenfunction `2^{-n} R^{-N} psi((x - x_n) / R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump<T> {
    pub n: usize,
    /// `g(t_n) = 2^{-(n+2)}`.
    pub time: T,
    pub radius: T,
    /// Centre on the first axis.
    pub center: T,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowDecayPlan<T> {
    pub dimension: usize,
    pub g: String,
    pub spacing: T,
    pub hole_extent: T,
    pub eigen: BallEigenpair<T>,
    pub bumps: Vec<Bump<T>>,
}

impl<T: Real> SlowDecayPlan<T> {
    pub fn lambda(&self) -> T {
        self.eigen.lambda
    }

    /// `|x_K| + R_K`, the extent the plan needs.
    pub fn required_extent(&self) -> T {
        self.bumps
            .last()
            .map_or(self.hole_extent, |b| b.center + b.radius)
    }

    /// Checks disjointness, clearance from the hole, the radius condition
    /// `exp(-lambda t_n / R_n^2) >= 1/2` and `sum 2^{-n} <= 1`.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InconsistentInputs(msg));
        let half = T::lit(0.5);
        let mut total = T::zero();
        for (k, b) in self.bumps.iter().enumerate() {
            if b.center - b.radius <= self.hole_extent {
                return fail(format!("ball {} meets the hole", b.n));
            }
            if (-self.lambda() * b.time / (b.radius * b.radius)).exp() < half {
                return fail(format!("radius {} too small for t = {}", b.radius, b.time));
            }
            if k > 0 {
                let prev = &self.bumps[k - 1];
                if prev.center + prev.radius >= b.center - b.radius {
                    return fail(format!("balls {} and {} overlap", prev.n, b.n));
                }
            }
            total += b.weight;
        }
        if total > T::one() + T::epsilon() {
            return fail(format!("bump weights sum to {total}"));
        }
        Ok(())
    }

    /// Sum of the selected bumps (by index `n`) sampled at the grid nodes.
    pub fn initial_datum(&self, grid: &Arc<Grid<T>>, which: &[usize]) -> Result<Field<T>> {
        if grid.backend() == Backend::Radial && grid.dimension() != 1 {
            return Err(Error::InconsistentInputs(
                "off-centre bumps need a Cartesian grid for N >= 2".into(),
            ));
        }
        let selected: Vec<&Bump<T>> = which
            .iter()
            .map(|&n| {
                self.bumps
                    .iter()
                    .find(|b| b.n == n)
                    .ok_or_else(|| Error::InconsistentInputs(format!("plan has no bump n = {n}")))
            })
            .collect::<Result<_>>()?;
        if let Some(b) = selected
            .iter()
            .find(|b| b.center + b.radius > grid.truncation_radius())
        {
            return Err(Error::NoRoom {
                bumps: b.n,
                required: (b.center + b.radius).to_f64_lossy(),
                available: grid.truncation_radius().to_f64_lossy(),
            });
        }
        let dim = self.dimension as i32;
        Ok(Field::from_fn(grid.clone(), |i| {
            let x = grid.coords(i);
            selected
                .iter()
                .map(|b| {
                    let d2: T = x
                        .iter()
                        .enumerate()
                        .map(|(axis, &xi)| {
                            let c = if axis == 0 { b.center } else { T::zero() };
                            (xi - c) * (xi - c)
                        })
                        .sum();
                    b.weight * self.eigen.psi_at(d2.sqrt() / b.radius) / b.radius.powi(dim)
                })
                .sum()
        }))
    }
}

/// Solves `g(t) = target` for a decreasing `g` by bisection.
fn invert_decreasing<T: Real>(g: &dyn Fn(T) -> T, target: T) -> Result<T> {
    let mut lo = T::zero();
    if !(g(lo) >= target) {
        return Err(Error::InconsistentInputs(format!(
            "g(0) = {} is below the target {target}",
            g(lo)
        )));
    }
    let mut hi = T::one();
    let mut doublings = 0;
    while g(hi) >= target {
        lo = hi;
        hi = hi + hi;
        doublings += 1;
        if doublings > 1000 || !hi.is_finite() {
            return Err(Error::InconsistentInputs(format!(
                "g does not fall below {target}"
            )));
        }
    }
    for _ in 0..400 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi || hi - lo <= T::lit(1e-13) * hi {
            break;
        }
        if g(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if g(hi) > g(lo) {
        return Err(Error::InconsistentInputs("g is not decreasing".into()));
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Builds the slow-decay plan for `g` in dimension `N <= 2`.
///
/// `t_n` solves `g(t_n) = 2^{-(n+2)}`, `R_n` is the smallest multiple of `h`
/// with `R_n >= sqrt(lambda t_n / ln 2)` and the balls are placed along the
/// first axis with `2h` clearance from the hole and from each other.
pub fn slow_decay_construct<T: Real>(
    domain: &DomainSpec<T>,
    g: &dyn Fn(T) -> T,
    g_description: &str,
    options: &SlowDecayOptions<T>,
) -> Result<SlowDecayPlan<T>> {
    let dimension = domain.dimension;
    if dimension > 2 || dimension == 0 {
        return Err(Error::OutOfRange {
            name: "dimension",
            value: dimension as f64,
            range: "{1, 2}",
        });
    }
    if options.bumps == 0 {
        return Err(Error::InconsistentInputs(
            "plan needs at least one bump".into(),
        ));
    }
    let h = domain.spacing;
    if !(h > T::zero()) {
        return Err(Error::OutOfRange {
            name: "spacing",
            value: h.to_f64_lossy(),
            range: "(0, inf)",
        });
    }
    let eigen = dirichlet_ball_eigenpair::<T>(dimension, options.eigen_resolution)?;
    let lambda = eigen.lambda;
    let hole_extent = domain.hole.extent();
    let half = T::lit(0.5);
    let two_h = h + h;

    let mut bumps = Vec::with_capacity(options.bumps);
    let mut cursor = hole_extent;
    for n in 1..=options.bumps {
        let weight = T::lit(0.5).powi(n as i32);
        let time = invert_decreasing(g, weight * T::lit(0.25))?;
        let min_radius = (lambda * time / T::LN_2()).sqrt();
        let mut radius = (min_radius / h).ceil() * h;
        while (-lambda * time / (radius * radius)).exp() < half {
            radius += h;
        }
        let center = ((cursor + two_h + radius) / h).ceil() * h;
        cursor = center + radius;
        bumps.push(Bump {
            n,
            time,
            radius,
            center,
            weight,
        });
    }
    if let Some(available) = options.max_extent {
        if cursor > available {
            return Err(Error::NoRoom {
                bumps: options.bumps,
                required: cursor.to_f64_lossy(),
                available: available.to_f64_lossy(),
            });
        }
    }
    let plan = SlowDecayPlan {
        dimension,
        g: g_description.to_string(),
        spacing: h,
        hole_extent,
        eigen,
        bumps,
    };
    plan.check_invariants()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Hole};
    use crate::mass::mass;

    fn inverse_t(t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else {
            1.0 / t
        }
    }

    #[test]
    fn inverts_g_analytically() {
        let g = |t: f64| (1.0 + t).powf(-0.25);
        let t1 = invert_decreasing(&g, 0.125).unwrap();
        assert!((t1 / 4095.0 - 1.0).abs() < 1e-9);
        let t1 = invert_decreasing(&inverse_t, 0.125).unwrap();
        assert!((t1 / 8.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn desk_scale_plan() {
        let domain = DomainSpec::cartesian(2, Hole::Ball { radius: 1.0 }, 200.0, 0.1);
        let plan = slow_decay_construct(
            &domain,
            &inverse_t,
            "min(1, 1/t)",
            &SlowDecayOptions::default(),
        )
        .unwrap();
        let b1 = &plan.bumps[0];
        assert!((b1.time - 8.0).abs() < 1e-8);
        assert!((b1.radius - 8.2).abs() < 1e-9, "{}", b1.radius);
        for (k, b) in plan.bumps.iter().enumerate() {
            assert!((b.time - 2f64.powi(k as i32 + 3)).abs() < 1e-6 * b.time);
        }
        plan.check_invariants().unwrap();
    }

    #[test]
    fn slowly_decaying_target_needs_large_balls() {
        let domain = DomainSpec::cartesian(2, Hole::Ball { radius: 1.0 }, 1e4, 0.1);
        let g = |t: f64| (1.0 + t).powf(-0.25);
        let options = SlowDecayOptions {
            bumps: 1,
            ..SlowDecayOptions::default()
        };
        let plan = slow_decay_construct(&domain, &g, "(1+t)^(-1/4)", &options).unwrap();
        assert!(plan.bumps[0].radius >= 184.9 && plan.bumps[0].radius < 185.1);
    }

    #[test]
    fn reports_missing_room() {
        let domain = DomainSpec::cartesian(2, Hole::Ball { radius: 1.0 }, 30.0, 0.2);
        let options = SlowDecayOptions {
            bumps: 3,
            max_extent: Some(30.0),
            ..SlowDecayOptions::default()
        };
        match slow_decay_construct(&domain, &inverse_t, "min(1, 1/t)", &options) {
            Err(Error::NoRoom { required, .. }) => assert!(required > 30.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_dimensional_plans_are_rejected() {
        let domain = DomainSpec::radial(3, 1.0, 10.0, 0.1);
        assert!(
            slow_decay_construct(&domain, &inverse_t, "g", &SlowDecayOptions::default()).is_err()
        );
    }

    #[test]
    fn one_dimensional_bump_has_its_weight_as_mass() {
        let domain = DomainSpec::radial(1, 1.0, 40.0, 0.05);
        let options = SlowDecayOptions {
            bumps: 1,
            ..SlowDecayOptions::default()
        };
        let plan = slow_decay_construct(&domain, &inverse_t, "min(1, 1/t)", &options).unwrap();
        let grid = Arc::new(build_grid(&domain).unwrap());
        let u0 = plan.initial_datum(&grid, &[1]).unwrap();
        assert!((mass(&u0) - 0.5).abs() < 1e-3, "{}", mass(&u0));
        assert!(plan.initial_datum(&grid, &[2]).is_err());
    }
}
