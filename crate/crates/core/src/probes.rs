//! Local probes: an idealized spring-balance gravimeter and the
//! charged/neutral probe pair used to read out an electromagnetic field.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::fields::GravityModel;
use crate::kinematics::{NonGravProfile, ParticleState};

/// Singular values below this fraction of the largest count as zero.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpringBalance {
    pub state: ParticleState,
    pub ng: NonGravProfile,
    /// Readout step, m/s². Zero disables quantization.
    pub resolution: f64,
}

/// Proper-acceleration magnitude at time `t`, quantized to the balance's
/// resolution. The field is accepted for symmetry with other probes but is
/// never read.
pub fn gravimeter_reading(balance: &SpringBalance, _field: &GravityModel, t: f64) -> f64 {
    let a = balance.ng.acceleration_at(t).norm();
    if balance.resolution > 0.0 {
        (a / balance.resolution).round() * balance.resolution
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldInference {
    /// `mu/R²`, m/s².
    pub inferred_g: f64,
    /// `|reading − mu/R²|`, m/s².
    pub discrepancy: f64,
    /// Uncertainty of `inferred_g` from the position error, m/s².
    pub uncertainty: f64,
}

/// Field difference implied by holding the apparatus at distance `r` from a
/// point source. `relative_position_error` is `δR/R`.
pub fn infer_field_difference(
    reading: f64,
    r: f64,
    mu: f64,
    relative_position_error: f64,
) -> Result<FieldInference> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("distance to source must be positive, got {r}")));
    }
    let g = mu / (r * r);
    Ok(FieldInference {
        inferred_g: g,
        discrepancy: (reading - g).abs(),
        uncertainty: 2.0 * relative_position_error.abs() * g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmField {
    /// V/m.
    pub e: Vector3<f64>,
    /// T.
    pub b: Vector3<f64>,
}

/// Relative acceleration `(q/m)(E + v × B)` of a charged probe against a
/// colocated neutral one, for each probe velocity.
pub fn em_probe_accelerations(
    field: &EmField,
    charge_to_mass: f64,
    velocities: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    velocities
        .iter()
        .map(|v| (field.e + v.cross(&field.b)) * charge_to_mass)
        .collect()
}

/// Gravitational analogue of [`em_probe_accelerations`]: every probe falls
/// with the same acceleration, so the relative accelerations vanish.
pub fn gravity_probe_accelerations(
    field: &GravityModel,
    position: &Vector3<f64>,
    velocities: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    let g = field.acceleration_at(position)?;
    Ok(velocities.iter().map(|_| g - g).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub field: EmField,
    /// Norm of the acceleration residual, m/s².
    pub residual: f64,
}

/// Least-squares fit of `(E, B)` to `(velocity, relative acceleration)`
/// measurements.
pub fn reconstruct_em_field(
    measurements: &[(Vector3<f64>, Vector3<f64>)],
    charge_to_mass: f64,
) -> Result<Reconstruction> {
    if charge_to_mass == 0.0 || !charge_to_mass.is_finite() {
        return Err(Error::domain("charge-to-mass ratio must be finite and non-zero"));
    }
    let rows = 3 * measurements.len();
    let mut a = DMatrix::<f64>::zeros(rows, 6);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (j, (v, acc)) in measurements.iter().enumerate() {
        // v × B = [v]ₓ B
        let cross = Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0);
        let r = 3 * j;
        a.view_mut((r, 0), (3, 3)).copy_from(&Matrix3::identity());
        a.view_mut((r, 3), (3, 3)).copy_from(&cross);
        rhs.rows_mut(r, 3).copy_from(&(acc / charge_to_mass));
    }
    if rows < 6 {
        return Err(Error::RankDeficient { rank: rank_of(&a) });
    }
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * RANK_RTOL;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < 6 {
        return Err(Error::RankDeficient { rank });
    }
    let x = svd.solve(&rhs, tol).map_err(|e| Error::domain(e.to_string()))?;
    let residual = (&a * &x - &rhs).norm() * charge_to_mass.abs();
    Ok(Reconstruction {
        field: EmField {
            e: Vector3::new(x[0], x[1], x[2]),
            b: Vector3::new(x[3], x[4], x[5]),
        },
        residual,
    })
}

fn rank_of(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let tol = sv.max() * RANK_RTOL;
    sv.iter().filter(|&&s| s > tol).count()
}
