//! Two point charges interacting through retarded and advanced
//! Liénard–Wiechert fields, integrated through a sequence of ordinary
//! differential systems of increasing fidelity.
//!
//! Units are scaled so that `c = 1` and the unit of length is
//! `|q1 q2| / (4π ε0 m2 c²)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod delay;
pub mod diagnostics;
pub mod error;
pub mod forces;
pub mod instantaneous;
pub mod iterated;
pub mod ode;
pub mod state;
pub mod units;

pub use delay::{bracket_delay, solve_advanced, solve_retarded, DelayTimes, Particle};
pub use diagnostics::{
    linear_fit, self_force, DEFAULT_DISTANCE_POINTS, singularity_time, total_momentum, trajectory_distance, DistanceReport, LinearFit,
};
pub use error::{Error, Result};
pub use forces::{alpha_mix, force_kernel, mass_matrix, mass_matrix_inverse, planar_force_kernel, Branch, FieldEvalInput, ForceKernel};
pub use instantaneous::{accel_linear_solve, h0_field, instantaneous_accels, AccelPair, KernelPath};
pub use iterated::{
    h_field, h_field_detailed, trajectory, trajectory_to, AccelSource, CachePolicy, DelayedStates, LevelConfig,
    LevelTolerances, Trajectory, TrajectoryFailure,
};
pub use ode::{eval_flow, integrate, AccelMode, Segment, StopCondition, Termination, TerminationReason, Tolerances};
pub use state::{ExtendedState, ParticleState, StateVector, Vec3};
pub use units::{
    circular_initial_condition, dimensionless_to_physical, make_params, physical_to_dimensionless, PhysicalState,
    Scales, SystemParams,
};
