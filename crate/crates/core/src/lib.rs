//! Quantum reduced action and trajectory engines for one-dimensional
//! stationary systems.
//!
//! The crate builds the reduced action `S0` from two independent real
//! solutions of the stationary Schrödinger equation, then traces particle
//! motion under two laws:
//!
//! * the Jacobi-theorem law, `t - t0 = dS0/dE`, whose velocity is a group
//!   velocity and diverges at isolated points while elapsed time stays finite;
//! * the conjugate-momentum law, `dS0/dx = 2 (E - V) / v`.
//!
//! Identity checks (Jacobi, Legendre duality, QSHJE residual, Lagrangian
//! rate) and the quantum coordinate transform live in [`transform`].

pub mod action;
pub mod basis;
mod constants;
mod error;
mod interval;
pub mod numerics;
pub mod potential;
pub mod trajectory;
pub mod transform;

pub use action::{
    convert_params, ConvertedParams, EnergyDerivative, FdPolicy, Microstate, ReducedAction,
};
pub use basis::{
    free_particle_basis, numeric_basis, numeric_basis_anchored, BasisPoint, BasisSample,
    SolutionBasis,
};
pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use interval::Interval;
pub use potential::{Potential, PotentialKind};
pub use trajectory::{
    bd_free_position, bd_velocity, compare_engines, find_singularities, group_velocity,
    group_velocity_by_difference, phase_velocity, reciprocal_group_velocity, time_of_position,
    trace_bd, trace_floyd, BdOptions, ComparisonRow, EngineComparison, Flag, Flags,
    FreeParticleClosedForm, Sample, Singularity, SingularitySet, Trajectory, TrajectoryEngine,
    Velocity,
};
pub use transform::{
    classify_region, identity_suite, lagrangian_rate, legendre_dual_check, quantum_transform,
    transform_table, IdentityEntry, IdentityReport, LagrangianRate, Region, SuiteTolerances,
    TransformRow, TransformTable, DEFAULT_EPS_TURN, DEFAULT_QUAD_TOL,
};
