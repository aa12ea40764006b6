//! Physical constants (SI).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Evaluations closer than this to a point-mass centre are rejected, m.
pub const SINGULARITY_EPSILON: f64 = 1e-3;

/// Default fixed integrator step, s.
pub const DEFAULT_DT: f64 = 1e-5;
