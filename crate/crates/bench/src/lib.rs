//! Fixtures shared by the benchmarks.

use nalgebra::{Matrix3, Vector3};
use ugfsim::{
    build_mach_zehnder, AtomSpec, GravityModel, InterferometerScenario, MirrorSpec, NonGravProfile,
    ParticleState, PropagationOptions,
};

pub const K: f64 = 1.6e7;
pub const T: f64 = 0.1;
pub const MASS: f64 = 1.44e-25;

/// Mach-Zehnder with a mirror pushed upward at `a_ng`.
pub fn uniform_scenario(a_ng: f64) -> InterferometerScenario {
    InterferometerScenario {
        sequence: build_mach_zehnder(K, T).expect("valid sequence"),
        atom: AtomSpec::new(MASS, ParticleState::at_rest(Vector3::new(0.0, 0.0, 0.5))).expect("mass"),
        mirror: MirrorSpec {
            initial: ParticleState::at_rest(Vector3::zeros()),
            ng: NonGravProfile::constant(0.0, 2.0 * T, Vector3::new(0.0, 0.0, a_ng)).expect("segment"),
        },
        field: GravityModel::uniform(Vector3::new(0.0, 0.0, -9.8)),
        propagation: PropagationOptions::default(),
        separation_phase: true,
    }
}

/// Same layout in a linear-gradient field, integrated with step `dt`.
pub fn gradient_scenario(dt: f64) -> InterferometerScenario {
    let gamma = Matrix3::from_diagonal(&Vector3::new(-1.5e-6, -1.5e-6, 3.0e-6));
    InterferometerScenario {
        field: GravityModel::linear_gradient(Vector3::new(0.0, 0.0, -9.8), gamma, Vector3::zeros()),
        propagation: PropagationOptions::numerical(dt),
        ..uniform_scenario(9.8)
    }
}
