//! Backward Euler time stepping of the discrete heat semigroup.
//!
//! One step solves `(I + dt A) u+ = u`, i.e. `(W + dt K) u+ = W u + dt g`
//! where `g` carries the boundary data. Since `W + dt K` is a symmetric
//! M-matrix the step is a contraction in `<., .>_h`, preserves order and is
//! self-adjoint, at any `dt > 0`.

use std::sync::Arc;

use crate::boundary::OuterCondition;
use crate::error::{Error, Result, Warning};
use crate::field::{same_grid, Field};
use crate::geometry::Grid;
use crate::linsolve::{solve_system, SolverOptions};
use crate::mass::{mass, MassTrace};
use crate::operator::DiscreteOperator;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping<T> {
    Fixed(T),
    /// `dt_{k+1} = growth * dt_k`, starting from `dt0`.
    Geometric {
        dt0: T,
        growth: T,
    },
}

impl<T: Real> Stepping<T> {
    /// Default long-horizon rule: `dt0 = h^2`, growth 1.05.
    pub fn geometric_for(grid: &Grid<T>) -> Self {
        Stepping::Geometric {
            dt0: grid.spacing() * grid.spacing(),
            growth: T::lit(1.05),
        }
    }

    fn initial(&self) -> T {
        match *self {
            Stepping::Fixed(dt) => dt,
            Stepping::Geometric { dt0, .. } => dt0,
        }
    }

    fn growth(&self) -> T {
        match *self {
            Stepping::Fixed(_) => T::one(),
            Stepping::Geometric { growth, .. } => growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSchedule<T> {
    /// Strictly increasing output times.
    pub times: Vec<T>,
    pub stepping: Stepping<T>,
}

impl<T: Real> TimeSchedule<T> {
    pub fn new(times: Vec<T>, stepping: Stepping<T>) -> Result<Self> {
        let schedule = Self { times, stepping };
        schedule.validate()?;
        Ok(schedule)
    }

    /// `count` output times spaced geometrically over `[t_lo, t_hi]`.
    pub fn log_spaced(t_lo: T, t_hi: T, count: usize, stepping: Stepping<T>) -> Result<Self> {
        if count < 2 || !(t_lo > T::zero()) || !(t_hi > t_lo) {
            return Err(Error::InconsistentInputs(
                "log-spaced schedule needs 0 < t_lo < t_hi and at least two times".into(),
            ));
        }
        let ratio = (t_hi / t_lo).ln() / T::from_usize_lossy(count - 1);
        let mut times: Vec<T> = (0..count)
            .map(|k| t_lo * (ratio * T::from_usize_lossy(k)).exp())
            .collect();
        times[count - 1] = t_hi;
        Self::new(times, stepping)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InconsistentInputs(
                "schedule has no output times".into(),
            ));
        }
        if !(self.times[0] > T::zero()) || self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InconsistentInputs(
                "output times must be positive and strictly increasing".into(),
            ));
        }
        let (dt0, growth) = (self.stepping.initial(), self.stepping.growth());
        if !(dt0 > T::zero()) || !dt0.is_finite() {
            return Err(Error::OutOfRange {
                name: "dt0",
                value: dt0.to_f64_lossy(),
                range: "(0, inf)",
            });
        }
        if !(growth >= T::one()) || !growth.is_finite() {
            return Err(Error::OutOfRange {
                name: "growth",
                value: growth.to_f64_lossy(),
                range: "[1, inf)",
            });
        }
        Ok(())
    }

    /// Step sizes in order, each tagged with the output it completes.
    /// Steps are shortened to land on output times; growth continues from
    /// the nominal size.
    pub fn steps(&self) -> Vec<(T, Option<usize>)> {
        let mut out = Vec::new();
        let mut t = T::zero();
        let mut nominal = self.stepping.initial();
        let growth = self.stepping.growth();
        for (k, &target) in self.times.iter().enumerate() {
            loop {
                let remaining = target - t;
                // Land exactly on the output time when within a hair of it.
                if remaining <= nominal * (T::one() + T::lit(1e-9)) {
                    out.push((remaining, Some(k)));
                    if remaining >= nominal * (T::one() - T::lit(1e-9)) {
                        nominal *= growth;
                    }
                    t = target;
                    break;
                }
                out.push((nominal, None));
                t += nominal;
                nominal *= growth;
            }
        }
        out
    }
}

/// Flow through the outer boundary, sampled at an output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSample<T> {
    pub time: T,
    /// Outflow rate at this time.
    pub rate: T,
    /// Time-integrated outflow since `t = 0`.
    pub cumulative: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult<T> {
    pub snapshots: Vec<(T, Field<T>)>,
    /// Mass at `t = 0` and at every output time.
    pub mass_trace: MassTrace<T>,
    pub outer_flux: Vec<FluxSample<T>>,
    pub warnings: Vec<Warning>,
    pub steps: usize,
    pub solver_iterations: usize,
}

impl<T: Real> EvolutionResult<T> {
    pub fn final_field(&self) -> &Field<T> {
        &self.snapshots.last().expect("schedule has output times").1
    }
}

/// One backward Euler step `(I + dt (A + gamma)) u+ = u`.
pub fn step<T: Real>(
    op: &DiscreteOperator<T>,
    u: &Field<T>,
    dt: T,
    solver: &SolverOptions,
) -> Result<Field<T>> {
    step_counted(op, u, dt, solver).map(|(f, _)| f)
}

fn step_counted<T: Real>(
    op: &DiscreteOperator<T>,
    u: &Field<T>,
    dt: T,
    solver: &SolverOptions,
) -> Result<(Field<T>, usize)> {
    if !same_grid(op.grid(), u.grid()) {
        return Err(Error::GridMismatch);
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::OutOfRange {
            name: "dt",
            value: dt.to_f64_lossy(),
            range: "(0, inf)",
        });
    }
    let x = op.gather(u);
    let b: Vec<T> = x
        .iter()
        .zip(op.free_weights())
        .zip(op.source())
        .map(|((&xi, &w), &g)| w * xi + dt * g)
        .collect();
    let system = op.system(T::one(), dt);
    let (next, report) = solve_system(&system, &b, Some(&x), solver)?;
    Ok((op.scatter(&next), report.iterations))
}

/// Evolves `u0` through the schedule, recording snapshots, mass and outer flux.
pub fn evolve<T: Real>(
    op: &DiscreteOperator<T>,
    u0: &Field<T>,
    schedule: &TimeSchedule<T>,
    solver: &SolverOptions,
) -> Result<EvolutionResult<T>> {
    schedule.validate()?;
    if !same_grid(op.grid(), u0.grid()) {
        return Err(Error::GridMismatch);
    }
    if u0.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InconsistentInputs(
            "initial datum is not finite".into(),
        ));
    }
    let initial_mass = mass(u0);
    let mut trace = vec![(T::zero(), initial_mass)];
    let mut snapshots = Vec::with_capacity(schedule.times.len());
    let mut outer_flux = Vec::with_capacity(schedule.times.len());
    let mut warnings = Vec::new();
    let mut cumulative = T::zero();
    let mut u = u0.clone();
    let mut t = T::zero();
    let mut steps = 0;
    let mut iterations = 0;
    let mut flagged = false;
    for (dt, output) in schedule.steps() {
        let (next, its) = step_counted(op, &u, dt, solver)?;
        u = next;
        iterations += its;
        steps += 1;
        // Backward Euler: the flux over the step is evaluated at the new state.
        let rate = op.outer_outflow(&u);
        cumulative += dt * rate;
        t += dt;
        if let Some(k) = output {
            t = schedule.times[k];
            trace.push((t, mass(&u)));
            outer_flux.push(FluxSample {
                time: t,
                rate,
                cumulative,
            });
            snapshots.push((t, u.clone()));
        }
        if !flagged
            && initial_mass.abs() > T::zero()
            && cumulative.abs() > T::lit(0.01) * initial_mass.abs()
            && op.boundary().outer() == OuterCondition::Dirichlet0
        {
            flagged = true;
            warnings.push(Warning::TruncationFlux {
                time: t.to_f64_lossy(),
                outflow: cumulative.to_f64_lossy(),
                initial_mass: initial_mass.to_f64_lossy(),
            });
        }
    }
    Ok(EvolutionResult {
        snapshots,
        mass_trace: MassTrace::new(trace, describe(op)),
        outer_flux,
        warnings,
        steps,
        solver_iterations: iterations,
    })
}

fn describe<T: Real>(op: &DiscreteOperator<T>) -> String {
    let grid = op.grid();
    format!(
        "N={} backend={:?} hole={:?} R={} h={} outer={:?}",
        grid.dimension(),
        grid.backend(),
        grid.hole(),
        grid.truncation_radius(),
        grid.spacing(),
        op.boundary().outer()
    )
}

/// Heat kernel column `k(., y, t)`: the evolution of the discrete delta at `y`.
pub fn kernel_column<T: Real>(
    op: &DiscreteOperator<T>,
    source_node: usize,
    t: T,
    stepping: Stepping<T>,
    solver: &SolverOptions,
) -> Result<Field<T>> {
    if source_node >= op.grid().node_count() {
        return Err(Error::InconsistentInputs(format!(
            "source node {source_node} out of range"
        )));
    }
    let schedule = TimeSchedule::new(vec![t], stepping)?;
    let delta = Field::delta(op.grid().clone(), source_node);
    let result = evolve(op, &delta, &schedule, solver)?;
    Ok(result.final_field().clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicProfile<T> {
    /// `S_h(t_max) 1`.
    pub field: Field<T>,
    pub snapshots: Vec<(T, Field<T>)>,
    /// Largest increase between consecutive snapshots (should be ~0).
    pub monotonicity_excess: T,
    /// `max |1 - u|` near `|x| = R/2` at the final time.
    pub front_deviation: T,
    pub warnings: Vec<Warning>,
}

/// Long-time limit of the heat flow started from `1`, with `u = 1` held on
/// the outer boundary.
pub fn parabolic_profile<T: Real>(
    op: &DiscreteOperator<T>,
    t_ladder: &[T],
    stepping: Stepping<T>,
    solver: &SolverOptions,
) -> Result<ParabolicProfile<T>> {
    if op.boundary().outer() != OuterCondition::FixedOne {
        return Err(Error::InconsistentInputs(
            "parabolic profiles need the outer condition FixedOne".into(),
        ));
    }
    let schedule = TimeSchedule::new(t_ladder.to_vec(), stepping)?;
    let grid: &Arc<Grid<T>> = op.grid();
    let one = Field::constant(grid.clone(), T::one());
    let result = evolve(op, &one, &schedule, solver)?;

    let mut excess = T::zero();
    let mut previous = one.values().to_vec();
    op.impose(&mut Field::new(grid.clone(), previous.clone())?);
    for (_, snap) in &result.snapshots {
        for (a, b) in snap.values().iter().zip(&previous) {
            excess = excess.max(*a - *b);
        }
        previous = snap.values().to_vec();
    }

    let half = grid.truncation_radius() * T::lit(0.5);
    let band = grid.spacing() * T::lit(0.5);
    let final_field = result.final_field().clone();
    let front_deviation = (0..grid.node_count())
        .filter(|&i| (grid.radius(i) - half).abs() <= band)
        .map(|i| (T::one() - final_field.values()[i]).abs())
        .fold(T::zero(), T::max);
    let mut warnings = result.warnings.clone();
    if front_deviation > T::lit(1e-3) {
        warnings.push(Warning::TruncationFront {
            time: t_ladder.last().map_or(0.0, |t| t.to_f64_lossy()),
            deviation: front_deviation.to_f64_lossy(),
        });
    }
    Ok(ParabolicProfile {
        field: final_field,
        snapshots: result.snapshots,
        monotonicity_excess: excess,
        front_deviation,
        warnings,
    })
}
