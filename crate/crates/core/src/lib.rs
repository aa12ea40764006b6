//! Light-pulse atom-interferometer phases, clock-pair frequency shifts and
//! local-probe readouts in configurable gravitational fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`fields`] evaluates gravitational accelerations and specific potentials.
//! * [`kinematics`] propagates classical bodies, in closed form for uniform
//!   fields and with a fixed-step RK4 integrator otherwise.
//! * [`interferometer`] builds pulse sequences and the two arm trajectories.
//! * [`phase`] computes the interferometer phase by three independent routes
//!   (midpoint rule, action difference, first-order perturbation theory).
//! * [`relativity`] handles proper-time rates and clock-pair shift budgets.
//! * [`probes`] covers the spring-balance gravimeter and the charged/neutral
//!   probe reconstruction of an electromagnetic field.
//!
//! Closed-form trajectories are carried in exact rational arithmetic so that
//! cancellations between phase terms of order 1e9 rad survive to well below
//! a nanoradian.

pub mod constants;
mod error;
mod exact;
pub mod fields;
pub mod interferometer;
pub mod kinematics;
pub mod phase;
pub mod probes;
pub mod relativity;

pub use error::{Error, Result};
pub use fields::GravityModel;
pub use interferometer::{
    build_mach_zehnder, build_mach_zehnder_with, closure_check, simulate_arms, ArmTrajectories,
    AtomSpec, Closure, KickConvention, MirrorSpec, Pulse, PulseSequence,
};
pub use kinematics::{
    linear_combination, propagate, propagate_with_impulses, relative_trajectory, Impulse, NgSegment,
    NonGravProfile, ParticleState, PathKind, PropagationOptions, Trajectory,
};
pub use phase::{
    cross_validate, phase_action, phase_midpoint, phase_perturbation, ActionPhase, CrossValidation,
    Engine, EngineComparison, EngineSet, InterferometerScenario, PerturbationPhase, PhaseBreakdown, Tolerances,
};
pub use probes::{
    em_probe_accelerations, gravimeter_reading, gravity_probe_accelerations,
    infer_field_difference, reconstruct_em_field, EmField, FieldInference, Reconstruction,
    SpringBalance,
};
pub use relativity::{
    doppler_from_kinematics, doppler_shift, gravitational_redshift, proper_time_rate,
    proper_time_rate_first_order, proper_time_rate_difference,
    shift_budget, AccelerationKind, ClockPairScenario, MetricUgf, ShiftBudget,
};
