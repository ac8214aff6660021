//! Elliptic construction of the asymptotic profile.
//!
//! For each truncation radius `R` the truncated profile `phi_R` is harmonic in
//! the domain, satisfies the theta condition on the hole and equals `1` on the
//! outer boundary. The profile is the decreasing limit of `phi_R` as
//! `R -> inf`; [`compute_profile`] walks a ladder of radii and certifies
//! monotone convergence on a fixed window around the hole.

use std::sync::Arc;

use crate::boundary::{classify_boundary, OuterCondition, ThetaSpec};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{build_grid, DomainSpec, Grid, LatticeKey};
use crate::linsolve::{solve_spd_from, SolveReport, SolverOptions};
use crate::operator::{assemble_operator, DiscreteOperator};
use crate::scalar::Real;

/// The profile constant for a ball hole of radius `r`.
///
/// This is `1 + tan(pi theta/2) / r` for `N <= 2` and
/// `1 + (N - 2) tan(pi theta/2) / r` for `N >= 3`; at `r = 1` these are the
/// usual `1 + tan(pi theta/2)` and `1 + (N-2) tan(pi theta/2)`.
pub fn profile_constant<T: Real>(dimension: usize, theta: T, hole_radius: T) -> T {
    let t = (T::FRAC_PI_2() * theta).tan();
    let factor = if dimension <= 2 {
        T::one()
    } else {
        T::from_usize_lossy(dimension - 2)
    };
    T::one() + factor * t / hole_radius
}

/// Radial profile of the ball hole `|x| < r` with constant theta.
///
/// With `R` given this is the truncated profile `phi_R(|x|)`; without it,
/// the limit `R -> inf`. The formulas solve the radial harmonic equation with
/// `u = T du/ds` at `s = r` (`T = tan(pi theta/2)`, the normal pointing into
/// the hole) and `u = 1` at `s = R`:
///
/// * `N = 1`: `(s - r + T) / (R - r + T)`
/// * `N = 2`: `(ln(s/r) + T/r) / (ln(R/r) + T/r)`
/// * `N >= 3`: `(s^{2-N} - C r^{2-N}) / (R^{2-N} - C r^{2-N})` with `C` from
///   [`profile_constant`].
///
/// The limits are `0` for `N <= 2` and `1 - r^{N-2} / (C s^{N-2})` for
/// `N >= 3`; theta = 1 gives `1` everywhere.
pub fn closed_form_profile<T: Real>(
    dimension: usize,
    hole_radius: T,
    theta: T,
    x_norm: T,
    truncation_radius: Option<T>,
) -> Result<T> {
    let (r, s) = (hole_radius, x_norm);
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta.to_f64_lossy(),
            range: "[0, 1]",
        });
    }
    let slack = T::lit(1e-12) * (T::one() + s.abs());
    let outside = dimension == 0
        || !(r > T::zero())
        || !(s >= r - slack)
        || truncation_radius.is_some_and(|big_r| !(s <= big_r + slack) || !(big_r > r));
    if outside {
        return Err(Error::OutOfDomain {
            point: vec![s.to_f64_lossy()],
        });
    }
    if theta == T::one() {
        return Ok(T::one());
    }
    let t = (T::FRAC_PI_2() * theta).tan();
    let c = profile_constant(dimension, theta, r);
    Ok(match (dimension, truncation_radius) {
        (1, Some(big_r)) => (s - r + t) / (big_r - r + t),
        (2, Some(big_r)) => ((s / r).ln() + t / r) / ((big_r / r).ln() + t / r),
        (n, Some(big_r)) => {
            let p = 2 - n as i32;
            (s.powi(p) - c * r.powi(p)) / (big_r.powi(p) - c * r.powi(p))
        }
        (1 | 2, None) => T::zero(),
        (n, None) => {
            let q = n as i32 - 2;
            T::one() - r.powi(q) / (c * s.powi(q))
        }
    })
}

fn profile_operator<T: Real>(
    grid: Arc<Grid<T>>,
    theta: &ThetaSpec<T>,
) -> Result<DiscreteOperator<T>> {
    if theta.outer != OuterCondition::FixedOne {
        return Err(Error::InconsistentInputs(format!(
            "truncated profiles need the outer condition FixedOne, got {:?}",
            theta.outer
        )));
    }
    let bc = classify_boundary(&grid, theta)?;
    assemble_operator(grid, &bc, T::zero())
}

fn solve_on<T: Real>(
    op: &DiscreteOperator<T>,
    guess: &Field<T>,
    solver: &SolverOptions,
) -> Result<(Field<T>, SolveReport)> {
    let zero = Field::zeros(op.grid().clone());
    solve_spd_from(op, &zero, Some(guess), solver)
}

/// Discrete `phi_R` on the grid of `spec`.
pub fn solve_truncated_profile<T: Real>(
    spec: &DomainSpec<T>,
    theta: &ThetaSpec<T>,
    solver: &SolverOptions,
) -> Result<Field<T>> {
    let grid = Arc::new(build_grid(spec)?);
    truncated_profile_on(grid, theta, solver).map(|(f, _)| f)
}

/// Discrete `phi_R` on an existing grid, started from the far-field value 1.
pub fn truncated_profile_on<T: Real>(
    grid: Arc<Grid<T>>,
    theta: &ThetaSpec<T>,
    solver: &SolverOptions,
) -> Result<(Field<T>, SolveReport)> {
    let op = profile_operator(grid.clone(), theta)?;
    solve_on(&op, &Field::constant(grid, T::one()), solver)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOptions<T> {
    /// Comparison window `|x| <= window_radius`; defaults to half the first radius.
    pub window_radius: Option<T>,
    pub window_tol: T,
    pub solver: SolverOptions,
}

impl<T: Real> Default for ProfileOptions<T> {
    fn default() -> Self {
        Self {
            window_radius: None,
            window_tol: T::lit(1e-3),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderStep<T> {
    pub radius: T,
    /// `max |phi_{R_k} - phi_{R_{k-1}}|` on the window (absent for the first rung).
    pub sup_diff: Option<T>,
    /// Values of `phi_{R_k}` on the window, in [`ProfileResult::window_nodes`] order.
    pub window_values: Vec<T>,
    pub solve: SolveReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileResult<T> {
    /// Solution on the largest truncation radius.
    pub phi: Field<T>,
    pub ladder: Vec<LadderStep<T>>,
    pub window_radius: T,
    /// Window nodes as indices into `phi`'s grid.
    pub window_nodes: Vec<usize>,
    pub converged: bool,
    /// Largest increase of `phi_R` with `R` seen on the window.
    pub monotonicity_excess: T,
    pub theta: String,
    pub domain: String,
}

impl<T: Real> ProfileResult<T> {
    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.phi.grid()
    }

    /// Value of the final profile at the node nearest to `point`.
    pub fn value_at(&self, point: &[T]) -> T {
        self.phi.values()[self.grid().nearest_node(point)]
    }

    /// `phi_{R_k}(x)` for every rung, at the window node nearest to `point`.
    pub fn ladder_values_at(&self, point: &[T]) -> Vec<T> {
        let node = self.grid().nearest_node(point);
        let pos = self
            .window_nodes
            .iter()
            .position(|&n| n == node)
            .unwrap_or(0);
        self.ladder.iter().map(|s| s.window_values[pos]).collect()
    }

    pub fn last_sup_diff(&self) -> Option<T> {
        self.ladder.last().and_then(|s| s.sup_diff)
    }
}

/// Solves `phi_R` along `ladder` and records the window convergence.
pub fn compute_profile<T: Real>(
    base: &DomainSpec<T>,
    theta: &ThetaSpec<T>,
    ladder: &[T],
    options: &ProfileOptions<T>,
) -> Result<ProfileResult<T>> {
    if ladder.is_empty() {
        return Err(Error::InconsistentInputs("empty profile ladder".into()));
    }
    if ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InconsistentInputs(
            "profile ladder must be strictly increasing".into(),
        ));
    }
    let window_radius = options
        .window_radius
        .unwrap_or_else(|| ladder[0] * T::lit(0.5));
    if !(window_radius < ladder[0]) {
        return Err(Error::InconsistentInputs(format!(
            "window radius {window_radius} must lie inside the smallest truncation radius {}",
            ladder[0]
        )));
    }
    let limit = T::lit(10.0 * options.solver.tol);

    let mut keys: Vec<LatticeKey> = Vec::new();
    let mut steps: Vec<LadderStep<T>> = Vec::with_capacity(ladder.len());
    let mut previous: Option<Field<T>> = None;
    let mut excess = T::zero();
    for &radius in ladder {
        let grid = Arc::new(build_grid(&base.with_truncation_radius(radius))?);
        if keys.is_empty() {
            keys = (0..grid.node_count())
                .filter(|&i| grid.radius(i) <= window_radius)
                .map(|i| grid.key(i))
                .collect();
        }
        let guess = match &previous {
            Some(prev) => {
                let pg = prev.grid();
                Field::from_fn(grid.clone(), |i| {
                    pg.node_at(&grid.key(i))
                        .map_or_else(T::one, |j| prev.values()[j])
                })
            }
            None => Field::constant(grid.clone(), T::one()),
        };
        let op = profile_operator(grid.clone(), theta)?;
        let (phi, solve) = solve_on(&op, &guess, &options.solver)?;
        let window_values: Vec<T> = keys
            .iter()
            .map(|k| {
                let i = grid.node_at(k).expect("ladder grids are nested");
                phi.values()[i]
            })
            .collect();
        let sup_diff = steps.last().map(|prev: &LadderStep<T>| {
            let mut sup = T::zero();
            for (&a, &b) in window_values.iter().zip(&prev.window_values) {
                sup = sup.max((a - b).abs());
                excess = excess.max(a - b);
            }
            sup
        });
        if excess > limit {
            return Err(Error::MonotonicityViolation {
                excess: excess.to_f64_lossy(),
                limit: limit.to_f64_lossy(),
            });
        }
        steps.push(LadderStep {
            radius,
            sup_diff,
            window_values,
            solve,
        });
        previous = Some(phi);
    }
    let phi = previous.expect("nonempty ladder");
    let grid = phi.grid().clone();
    let window_nodes = keys
        .iter()
        .map(|k| grid.node_at(k).expect("ladder grids are nested"))
        .collect();
    let converged = steps
        .last()
        .and_then(|s| s.sup_diff)
        .is_some_and(|d| d < options.window_tol);
    Ok(ProfileResult {
        phi,
        ladder: steps,
        window_radius,
        window_nodes,
        converged,
        monotonicity_excess: excess,
        theta: theta.describe(),
        domain: format!(
            "{:?}",
            base.with_truncation_radius(*ladder.last().expect("nonempty"))
        ),
    })
}
