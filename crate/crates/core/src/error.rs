use thiserror::Error;

use crate::linsolve::SolveReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),

    #[error("{name} = {value} is outside the admissible range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("theta vanishes on part of hole component {component} but not on all of it")]
    MixedDirichlet { component: usize },

    #[error("no theta assigned to hole component {component} ({available} given)")]
    MissingComponent { component: usize, available: usize },

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("field and operator live on different grids")]
    GridMismatch,

    #[error("solver did not converge after {} iterations (relative residual {:.3e})", .report.iterations, .report.relative_residual)]
    NotConverged { report: SolveReport },

    #[error("singular system: pure Neumann problem with gamma = 0 and no Dirichlet outer face")]
    SingularSystem,

    #[error("truncated profiles increased with R by {excess:.3e} on the comparison window (limit {limit:.3e})")]
    MonotonicityViolation { excess: f64, limit: f64 },

    #[error(
        "initial datum has support at |x| = {radius} outside the trusted window |x| <= {window}"
    )]
    SupportOutsideWindow { radius: f64, window: f64 },

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error(
        "no room for {bumps} disjoint balls: required extent {required:.4} exceeds {available:.4}"
    )]
    NoRoom {
        bumps: usize,
        required: f64,
        available: f64,
    },

    #[error("point {point:?} is outside the domain")]
    OutOfDomain { point: Vec<f64> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Mass lost through the artificial outer boundary exceeded 1% of the initial mass.
    TruncationFlux {
        time: f64,
        outflow: f64,
        initial_mass: f64,
    },
    /// The loss front of a profile run reached `|x| = R/2`.
    TruncationFront { time: f64, deviation: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::TruncationFlux {
                time,
                outflow,
                initial_mass,
            } => write!(
                f,
                "truncation: {outflow:.3e} of initial mass {initial_mass:.3e} left through the outer boundary by t = {time}"
            ),
            Warning::TruncationFront { time, deviation } => write!(
                f,
                "truncation: field deviates from 1 by {deviation:.3e} at |x| = R/2 at t = {time}"
            ),
        }
    }
}
