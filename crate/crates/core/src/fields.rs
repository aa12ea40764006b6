//! Gravitational field models.
//!
//! All values are per unit mass: accelerations in m/s² and specific
//! potentials in m²/s². Mass only enters the phase formulas.

use nalgebra::{Matrix3, Vector3};

use crate::constants::SINGULARITY_EPSILON;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum GravityModel {
    /// Position-independent field `a_G`. The potential is gauged to vanish at
    /// `reference`.
    Uniform {
        acceleration: Vector3<f64>,
        reference: Vector3<f64>,
    },
    /// First-order Taylor field `a_0 + Γ (x − x_ref)`.
    ///
    /// `gradient` need not be symmetric or trace-free. The potential is built
    /// from the symmetric part of `gradient`, so it is only a true potential
    /// of the acceleration when `gradient` is symmetric.
    LinearGradient {
        acceleration: Vector3<f64>,
        gradient: Matrix3<f64>,
        reference: Vector3<f64>,
    },
    /// Newtonian point mass with `mu = G M`.
    PointMass { mu: f64, center: Vector3<f64> },
}

impl GravityModel {
    pub fn uniform(acceleration: Vector3<f64>) -> Self {
        GravityModel::Uniform {
            acceleration,
            reference: Vector3::zeros(),
        }
    }

    /// Gravity-free space.
    pub fn zero() -> Self {
        Self::uniform(Vector3::zeros())
    }

    pub fn point_mass(mu: f64, center: Vector3<f64>) -> Self {
        GravityModel::PointMass { mu, center }
    }

    pub fn linear_gradient(
        acceleration: Vector3<f64>,
        gradient: Matrix3<f64>,
        reference: Vector3<f64>,
    ) -> Self {
        GravityModel::LinearGradient {
            acceleration,
            gradient,
            reference,
        }
    }

    /// The constant acceleration if the field is uniform.
    pub fn uniform_acceleration(&self) -> Option<Vector3<f64>> {
        match self {
            GravityModel::Uniform { acceleration, .. } => Some(*acceleration),
            _ => None,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, GravityModel::Uniform { .. })
    }

    /// Checks that every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            GravityModel::Uniform {
                acceleration,
                reference,
            } => all_finite(acceleration) && all_finite(reference),
            GravityModel::LinearGradient {
                acceleration,
                gradient,
                reference,
            } => {
                all_finite(acceleration)
                    && gradient.iter().all(|g| g.is_finite())
                    && all_finite(reference)
            }
            GravityModel::PointMass { mu, center } => mu.is_finite() && all_finite(center),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::domain("gravity model has non-finite parameters"))
        }
    }

    pub fn acceleration_at(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        match self {
            GravityModel::Uniform { acceleration, .. } => Ok(*acceleration),
            GravityModel::LinearGradient {
                acceleration,
                gradient,
                reference,
            } => Ok(acceleration + gradient * (x - reference)),
            GravityModel::PointMass { mu, center } => {
                let r = x - center;
                let dist = checked_distance(&r)?;
                Ok(r * (-mu / (dist * dist * dist)))
            }
        }
    }

    pub fn potential_at(&self, x: &Vector3<f64>) -> Result<f64> {
        match self {
            GravityModel::Uniform {
                acceleration,
                reference,
            } => Ok(-acceleration.dot(&(x - reference))),
            GravityModel::LinearGradient {
                acceleration,
                gradient,
                reference,
            } => {
                let d = x - reference;
                let sym = symmetric_part(gradient);
                Ok(-acceleration.dot(&d) - 0.5 * d.dot(&(sym * d)))
            }
            GravityModel::PointMass { mu, center } => {
                let dist = checked_distance(&(x - center))?;
                Ok(-mu / dist)
            }
        }
    }

    /// `V(a) − V(b)`, evaluated without subtracting two large potentials.
    ///
    /// Near a point mass at planetary distance the potentials are ~1e7 m²/s²
    /// while arm-to-arm differences are ~0.1 m²/s², so the difference is formed
    /// from `a − b` directly.
    pub fn potential_difference(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<f64> {
        let diff = a - b;
        match self {
            GravityModel::Uniform { acceleration, .. } => Ok(-acceleration.dot(&diff)),
            GravityModel::LinearGradient {
                acceleration,
                gradient,
                reference,
            } => {
                let sum = a + b - reference * 2.0;
                let sym = symmetric_part(gradient);
                Ok(-acceleration.dot(&diff) - 0.5 * diff.dot(&(sym * sum)))
            }
            GravityModel::PointMass { mu, center } => {
                let ra = checked_distance(&(a - center))?;
                let rb = checked_distance(&(b - center))?;
                // |ra|² − |rb|² = (a − b)·(a + b − 2c)
                let sq_diff = diff.dot(&(a + b - center * 2.0));
                Ok(mu * sq_diff / (ra * rb * (ra + rb)))
            }
        }
    }
}

fn all_finite(v: &Vector3<f64>) -> bool {
    v.iter().all(|c| c.is_finite())
}

fn symmetric_part(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

fn checked_distance(r: &Vector3<f64>) -> Result<f64> {
    let dist = r.norm();
    if dist < SINGULARITY_EPSILON {
        Err(Error::Singularity { distance: dist })
    } else {
        Ok(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EARTH_MU: f64 = 3.986e14;
    const EARTH_R: f64 = 6.371e6;

    fn grad_of_potential(model: &GravityModel, x: &Vector3<f64>, h: f64) -> Vector3<f64> {
        let mut g = Vector3::zeros();
        for i in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = model.potential_difference(&xp, &xm).unwrap() / (2.0 * h);
        }
        g
    }

    #[test]
    fn uniform_is_position_independent() {
        let m = GravityModel::uniform(Vector3::new(0.0, 0.0, -9.8));
        for x in [Vector3::zeros(), Vector3::new(1e6, -3.0, 2e3)] {
            assert_eq!(m.acceleration_at(&x).unwrap(), Vector3::new(0.0, 0.0, -9.8));
        }
    }

    #[test]
    fn earth_surface_gravity() {
        let m = GravityModel::point_mass(EARTH_MU, Vector3::zeros());
        let a = m.acceleration_at(&Vector3::new(EARTH_R, 0.0, 0.0)).unwrap();
        // scalar oracle
        let expected = EARTH_MU / (EARTH_R * EARTH_R);
        assert!((a.norm() - expected).abs() < 1e-12 * expected);
        assert!((a.norm() - 9.820).abs() < 5e-4);
        assert!(a.x < 0.0 && a.y == 0.0 && a.z == 0.0);
    }

    #[test]
    fn gradient_field_matvec() {
        let gamma = Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 3e-6));
        let m = GravityModel::linear_gradient(Vector3::zeros(), gamma, Vector3::zeros());
        let a = m.acceleration_at(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(a, Vector3::new(0.0, 0.0, 3e-6));
    }

    #[test]
    fn uniform_potential_sign() {
        let a = 9.8;
        let z0 = 2.0;
        let m = GravityModel::Uniform {
            acceleration: Vector3::new(0.0, 0.0, -a),
            reference: Vector3::new(0.0, 0.0, z0),
        };
        let z = 5.5;
        let v = m.potential_at(&Vector3::new(0.0, 0.0, z)).unwrap();
        assert!((v - a * (z - z0)).abs() < 1e-12);
    }

    #[test]
    fn point_mass_potential_vanishes_at_infinity() {
        let m = GravityModel::point_mass(EARTH_MU, Vector3::zeros());
        let far = m.potential_at(&Vector3::new(1e30, 0.0, 0.0)).unwrap();
        assert!(far.abs() < 1e-15);
    }

    #[test]
    fn singularity_rejected() {
        let m = GravityModel::point_mass(EARTH_MU, Vector3::new(1.0, 2.0, 3.0));
        let err = m.acceleration_at(&Vector3::new(1.0, 2.0, 3.0005)).unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
        assert!(m.potential_at(&Vector3::new(1.0, 2.0, 3.0)).is_err());
        assert!(m.acceleration_at(&Vector3::new(1.0, 2.0, 3.002)).is_ok());
    }

    #[test]
    fn inverse_square_scaling() {
        let m = GravityModel::point_mass(EARTH_MU, Vector3::zeros());
        let r = Vector3::new(3e6, -4e6, 1.2e6);
        let g1 = m.acceleration_at(&r).unwrap().norm();
        let g2 = m.acceleration_at(&(r * 2.0)).unwrap().norm();
        assert!((g2 / g1 - 0.25).abs() < 1e-12 * 0.25);
    }

    #[test]
    fn potential_difference_matches_direct_where_direct_is_accurate() {
        let m = GravityModel::point_mass(10.0, Vector3::zeros());
        let a = Vector3::new(1.0, 2.0, 0.5);
        let b = Vector3::new(-1.5, 0.3, 2.0);
        let direct = m.potential_at(&a).unwrap() - m.potential_at(&b).unwrap();
        assert!((m.potential_difference(&a, &b).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn potential_difference_near_earth_is_stable() {
        // two points 1 cm apart near the surface: ΔV ≈ g Δz
        let m = GravityModel::point_mass(EARTH_MU, Vector3::new(0.0, 0.0, -EARTH_R));
        let a = Vector3::new(0.0, 0.0, 0.01);
        let b = Vector3::zeros();
        let dv = m.potential_difference(&a, &b).unwrap();
        // series oracle: mu/R − mu/(R + h) = mu h / (R (R + h))
        let oracle = EARTH_MU * 0.01 / (EARTH_R * (EARTH_R + 0.01));
        assert!((dv - oracle).abs() < 1e-14 * oracle);
    }

    fn arb_vec(range: f64) -> impl Strategy<Value = Vector3<f64>> {
        (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn uniform_difference_is_exactly_zero(a in arb_vec(100.0), x in arb_vec(1e4), y in arb_vec(1e4)) {
            let m = GravityModel::uniform(a);
            prop_assert_eq!(m.acceleration_at(&x).unwrap() - m.acceleration_at(&y).unwrap(), Vector3::zeros());
        }

        #[test]
        fn uniform_potential_is_linear(a in arb_vec(100.0), x in arb_vec(10.0), y in arb_vec(10.0)) {
            let m = GravityModel::uniform(a);
            let lhs = m.potential_at(&x).unwrap() - m.potential_at(&y).unwrap();
            let rhs = -a.dot(&(x - y));
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn gradient_of_potential_is_minus_acceleration(
            a in arb_vec(20.0),
            g in proptest::array::uniform6(-1e-3f64..1e-3),
            x in arb_vec(50.0),
            theta in 0.0f64..std::f64::consts::PI,
            phi in 0.0f64..(2.0 * std::f64::consts::PI),
        ) {
            let dir = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let gamma = Matrix3::new(g[0], g[1], g[2], g[1], g[3], g[4], g[2], g[4], g[5]);
            let models = [
                GravityModel::uniform(a),
                GravityModel::linear_gradient(a, gamma, Vector3::new(1.0, -2.0, 0.5)),
                GravityModel::point_mass(EARTH_MU, -(dir * EARTH_R)),
            ];
            for m in &models {
                let acc = m.acceleration_at(&x).unwrap();
                let grad = grad_of_potential(m, &x, 1e-3);
                let scale = acc.norm().max(1e-12);
                for i in 0..3 {
                    prop_assert!((grad[i] + acc[i]).abs() <= 1e-6 * scale,
                        "model {:?} component {} grad {} acc {}", m, i, grad[i], acc[i]);
                }
            }
        }
    }
}
