//! Heat flow on exterior domains `R^N \ C` with theta-parameterised
//! boundary conditions `sin(pi theta/2) du/dn + cos(pi theta/2) u = 0`.
//!
//! The crate discretises the problem with a symmetric monotone finite-volume
//! scheme (radial or Cartesian), computes the asymptotic profile both as the
//! limit of truncated harmonic problems and as the long-time limit of the heat
//! flow started from `1`, and measures mass loss: asymptotic masses, decay
//! exponents, and the slow-decay initial data of the two-dimensional case.
//!
//! All numerics are generic over [`Real`]; the `*64` and `*32` aliases below
//! fix the scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod field;
pub mod geometry;
pub mod heat;
pub mod initial;
pub mod linsolve;
pub mod mass;
pub mod operator;
pub mod profile;
pub mod scalar;
pub mod sparse;
pub mod verify;

pub use boundary::{
    classify_boundary, robin_coefficient, BoundaryData, FaceClass, FaceCondition, OuterCondition,
    RobinCoefficient, ThetaExpr, ThetaField, ThetaSpec,
};
pub use error::{Error, Result, Warning};
pub use field::Field;
pub use geometry::{
    build_grid, Backend, BoundaryFace, DomainSpec, FaceSide, Grid, Hole, MaskShape,
};
pub use heat::{
    evolve, kernel_column, parabolic_profile, step, EvolutionResult, Stepping, TimeSchedule,
};
pub use initial::InitialShape;
pub use linsolve::{solve_spd, Preconditioner, SolveReport, SolverOptions};
pub use mass::{
    asymptotic_mass, conserved_functional, dirichlet_ball_eigenpair, fit_decay_exponent, mass,
    slow_decay_construct, MassTrace, SlowDecayOptions, SlowDecayPlan,
};
pub use operator::{assemble_operator, AssemblyOptions, DiscreteOperator};
pub use profile::{
    closed_form_profile, compute_profile, profile_constant, solve_truncated_profile,
    ProfileOptions, ProfileResult,
};
pub use scalar::Real;

pub type DomainSpec64 = DomainSpec<f64>;
pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type ThetaSpec64 = ThetaSpec<f64>;
pub type BoundaryData64 = BoundaryData<f64>;
pub type DiscreteOperator64 = DiscreteOperator<f64>;
pub type ProfileResult64 = ProfileResult<f64>;
pub type EvolutionResult64 = EvolutionResult<f64>;
pub type MassTrace64 = MassTrace<f64>;
pub type SlowDecayPlan64 = SlowDecayPlan<f64>;

pub type DomainSpec32 = DomainSpec<f32>;
pub type Grid32 = Grid<f32>;
pub type Field32 = Field<f32>;
pub type ThetaSpec32 = ThetaSpec<f32>;
pub type DiscreteOperator32 = DiscreteOperator<f32>;
