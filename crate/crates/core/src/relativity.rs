//! Clock rates in the uniform-field metric
//! `dτ² = (1 − a_G·x/c²)² dt² − dx²/c²` and first-order frequency shifts
//! between two clocks.
//!
//! The separation `d` is the source position minus the detector position.
//! A positive fractional shift is a blueshift.

use log::warn;
use nalgebra::Vector3;

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::fields::GravityModel;
use crate::kinematics::{propagate, NonGravProfile, ParticleState, PropagationOptions};

/// Fractional shifts above this leave the first-order regime.
pub const FIRST_ORDER_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricUgf {
    pub a_g: Vector3<f64>,
    pub c: f64,
}

impl MetricUgf {
    pub fn new(a_g: Vector3<f64>) -> Self {
        Self {
            a_g,
            c: SPEED_OF_LIGHT,
        }
    }

    /// `1 − a_G·x/c²`.
    pub fn rate_factor(&self, x: &Vector3<f64>) -> f64 {
        1.0 - self.a_g.dot(x) / (self.c * self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelerationKind {
    Gravitational,
    NonGravitational,
}

/// Source and detector with equal velocity, separated by `separation`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockPairScenario {
    pub detector: ParticleState,
    /// Source minus detector, m.
    pub separation: Vector3<f64>,
    pub ng: NonGravProfile,
    pub metric: MetricUgf,
    /// Emitted frequency, Hz.
    pub f0: f64,
}

impl ClockPairScenario {
    pub fn source(&self) -> ParticleState {
        ParticleState::new(
            self.detector.position + self.separation,
            self.detector.velocity,
            self.detector.time,
        )
    }

    /// Common non-gravitational acceleration at the emission time.
    pub fn a_ng(&self) -> Vector3<f64> {
        self.ng.acceleration_at(self.detector.time)
    }

    fn acceleration(&self, kind: AccelerationKind) -> Vector3<f64> {
        match kind {
            AccelerationKind::Gravitational => self.metric.a_g,
            AccelerationKind::NonGravitational => self.a_ng(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftBudget {
    pub f0: f64,
    /// Fractional shifts.
    pub doppler_ng: f64,
    pub doppler_g: f64,
    pub redshift: f64,
    pub total: f64,
    /// Same terms in Hz.
    pub doppler_ng_hz: f64,
    pub doppler_g_hz: f64,
    pub redshift_hz: f64,
    pub total_hz: f64,
    pub gravitational_pair_cancels: bool,
}

/// Exact rate `dτ/dt = sqrt((1 − a_G·x/c²)² − |v|²/c²)`.
pub fn proper_time_rate(metric: &MetricUgf, x: &Vector3<f64>, v: &Vector3<f64>) -> Result<f64> {
    let w = metric.rate_factor(x);
    let beta2 = v.norm_squared() / (metric.c * metric.c);
    if w <= 0.0 {
        return Err(Error::domain(format!("clock rate factor {w} is not positive")));
    }
    let arg = w * w - beta2;
    if arg <= 0.0 {
        return Err(Error::domain(format!("proper-time rate argument {arg} is not positive")));
    }
    Ok(arg.sqrt())
}

/// First-order rate `1 − a_G·x/c² − |v|²/2c²`.
pub fn proper_time_rate_first_order(metric: &MetricUgf, x: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    metric.rate_factor(x) - v.norm_squared() / (2.0 * metric.c * metric.c)
}

/// Exact rate difference `dτ_d/dt − dτ_s/dt` for two clocks sharing
/// velocity `v`, evaluated without subtracting two numbers near 1.
pub fn proper_time_rate_difference(
    metric: &MetricUgf,
    x_detector: &Vector3<f64>,
    x_source: &Vector3<f64>,
    v: &Vector3<f64>,
) -> Result<f64> {
    // validates both points
    proper_time_rate(metric, x_detector, v)?;
    proper_time_rate(metric, x_source, v)?;
    let c2 = metric.c * metric.c;
    let wd = metric.rate_factor(x_detector);
    let ws = metric.rate_factor(x_source);
    let dw = metric.a_g.dot(&(x_source - x_detector)) / c2;
    let beta2 = v.norm_squared() / c2;
    if beta2 == 0.0 {
        return Ok(dw);
    }
    let sd = (1.0 - beta2 / (wd * wd)).sqrt();
    let ss = (1.0 - beta2 / (ws * ws)).sqrt();
    let ds = beta2 * dw * (wd + ws) / (ws * ws * wd * wd * (sd + ss));
    Ok(dw * sd + ws * ds)
}

fn check_regime(value: f64, what: &str) {
    if value.abs() > FIRST_ORDER_LIMIT {
        warn!("{what} fractional shift {value:e} is beyond the first-order regime");
    }
}

/// Fractional Doppler shift `a·d/c²` from the detector's velocity gain
/// during the light travel time.
pub fn doppler_shift(scenario: &ClockPairScenario, kind: AccelerationKind) -> f64 {
    let c = scenario.metric.c;
    let shift = scenario.acceleration(kind).dot(&scenario.separation) / (c * c);
    check_regime(shift, "Doppler");
    shift
}

/// Fractional Doppler shift obtained by propagating the detector for the
/// light travel time `|d|/c` and projecting its velocity gain on `d`.
pub fn doppler_from_kinematics(scenario: &ClockPairScenario, kind: AccelerationKind) -> Result<f64> {
    let c = scenario.metric.c;
    let dist = scenario.separation.norm();
    if dist == 0.0 {
        return Ok(0.0);
    }
    let travel = dist / c;
    let a = scenario.acceleration(kind);
    let start = ParticleState::new(Vector3::zeros(), Vector3::zeros(), 0.0);
    let (field, ng) = match kind {
        AccelerationKind::Gravitational => (GravityModel::uniform(a), NonGravProfile::free_fall()),
        AccelerationKind::NonGravitational => {
            (GravityModel::zero(), NonGravProfile::constant(0.0, travel, a)?)
        }
    };
    let end = propagate(&start, travel, &field, &ng, &PropagationOptions::default())?;
    let gain = end.state_before(travel)?.velocity;
    Ok(gain.dot(&(scenario.separation / dist)) / c)
}

/// Fractional gravitational shift `−a_G·d/c²`.
pub fn gravitational_redshift(scenario: &ClockPairScenario) -> f64 {
    -doppler_shift(scenario, AccelerationKind::Gravitational)
}

pub fn shift_budget(scenario: &ClockPairScenario) -> ShiftBudget {
    let f0 = scenario.f0;
    let doppler_ng = doppler_shift(scenario, AccelerationKind::NonGravitational);
    let doppler_g = doppler_shift(scenario, AccelerationKind::Gravitational);
    let redshift = gravitational_redshift(scenario);
    let total = doppler_ng + (doppler_g + redshift);
    let (dng_hz, dg_hz, rg_hz) = (doppler_ng * f0, doppler_g * f0, redshift * f0);
    ShiftBudget {
        f0,
        doppler_ng,
        doppler_g,
        redshift,
        total,
        doppler_ng_hz: dng_hz,
        doppler_g_hz: dg_hz,
        redshift_hz: rg_hz,
        total_hz: dng_hz + (dg_hz + rg_hz),
        gravitational_pair_cancels: doppler_g + redshift == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C2: f64 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;

    fn pair(a_g: Vector3<f64>, a_ng: Vector3<f64>, d: Vector3<f64>) -> ClockPairScenario {
        ClockPairScenario {
            detector: ParticleState::at_rest(Vector3::zeros()),
            separation: d,
            ng: if a_ng == Vector3::zeros() {
                NonGravProfile::free_fall()
            } else {
                NonGravProfile::constant(0.0, 1.0, a_ng).unwrap()
            },
            metric: MetricUgf::new(a_g),
            f0: 1.0e15,
        }
    }

    fn vz(z: f64) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, z)
    }

    #[test]
    fn origin_rate_is_one() {
        let m = MetricUgf::new(vz(-9.8));
        assert_eq!(proper_time_rate(&m, &Vector3::zeros(), &Vector3::zeros()).unwrap(), 1.0);
    }

    #[test]
    fn static_rate_difference() {
        let m = MetricUgf::new(vz(-9.8));
        let diff = proper_time_rate_difference(&m, &Vector3::zeros(), &vz(22.5), &Vector3::zeros()).unwrap();
        let expected = -9.8 * 22.5 / C2;
        assert_eq!(diff, expected);
        assert!((diff + 2.454e-15).abs() < 1e-18);
    }

    #[test]
    fn moving_rate_difference_matches_direct() {
        let m = MetricUgf::new(vz(-9.8));
        let v = Vector3::new(3.0e5, 0.0, 1.0e5);
        let (xd, xs) = (vz(-1.0e9), vz(1.0e9));
        let direct = proper_time_rate(&m, &xd, &v).unwrap() - proper_time_rate(&m, &xs, &v).unwrap();
        let stable = proper_time_rate_difference(&m, &xd, &xs, &v).unwrap();
        assert!((direct - stable).abs() < 1e-15, "{direct} {stable}");
    }

    #[test]
    fn first_order_rate() {
        let m = MetricUgf::new(vz(-9.8));
        let x = vz(1000.0);
        let v = Vector3::new(30.0, 0.0, 0.0);
        let exact = proper_time_rate(&m, &x, &v).unwrap();
        assert!((exact - proper_time_rate_first_order(&m, &x, &v)).abs() < 1e-22);
    }

    #[test]
    fn rate_domain_errors() {
        let m = MetricUgf::new(vz(-C2));
        assert!(proper_time_rate(&m, &vz(-2.0), &Vector3::zeros()).is_err());
        let flat = MetricUgf::new(Vector3::zeros());
        assert!(proper_time_rate(&flat, &Vector3::zeros(), &Vector3::new(SPEED_OF_LIGHT, 0.0, 0.0)).is_err());
    }

    #[test]
    fn free_fall_doppler_is_blueshift() {
        let s = pair(vz(-9.8), Vector3::zeros(), vz(-22.5));
        let d = doppler_shift(&s, AccelerationKind::Gravitational);
        assert!((d - 2.454e-15).abs() < 1e-18);
        assert_eq!(doppler_shift(&s, AccelerationKind::NonGravitational), 0.0);
        assert_eq!(gravitational_redshift(&s), -d);
    }

    #[test]
    fn perpendicular_separation_has_no_shift() {
        let s = pair(vz(-9.8), Vector3::zeros(), Vector3::new(22.5, 0.0, 0.0));
        assert_eq!(doppler_shift(&s, AccelerationKind::Gravitational), 0.0);
    }

    #[test]
    fn flat_or_colocated_has_no_redshift() {
        assert_eq!(gravitational_redshift(&pair(Vector3::zeros(), Vector3::zeros(), vz(5.0))), 0.0);
        assert_eq!(gravitational_redshift(&pair(vz(-9.8), Vector3::zeros(), Vector3::zeros())), 0.0);
    }

    #[test]
    fn pound_rebka_budget() {
        let b = shift_budget(&pair(vz(-9.8), vz(9.8), vz(22.5)));
        assert!((b.total - 2.454e-15).abs() < 1e-18);
        assert_eq!(b.total, b.doppler_ng);
        assert!(b.gravitational_pair_cancels);
        assert_eq!(b.total_hz, b.doppler_ng_hz);
        let doubled = shift_budget(&pair(vz(-19.6), vz(9.8), vz(22.5)));
        assert_eq!(doubled.total, b.total);
    }

    #[test]
    fn free_fall_budget_is_zero() {
        let b = shift_budget(&pair(vz(-9.8), Vector3::zeros(), vz(22.5)));
        assert_eq!(b.total, 0.0);
        assert_eq!(b.total_hz, 0.0);
    }

    #[test]
    fn kinematic_doppler_matches_formula() {
        let s = pair(Vector3::new(1.0, -2.0, -9.8), vz(9.8), Vector3::new(3.0, 4.0, 22.5));
        for kind in [AccelerationKind::Gravitational, AccelerationKind::NonGravitational] {
            let f = doppler_shift(&s, kind);
            let k = doppler_from_kinematics(&s, kind).unwrap();
            assert!((f - k).abs() <= 1e-12 * f.abs(), "{kind:?}: {f} {k}");
        }
    }

    proptest! {
        #[test]
        fn gravitational_pair_cancels(
            g in prop::array::uniform3(-100.0f64..100.0),
            d in prop::array::uniform3(-1e3f64..1e3),
        ) {
            let s = pair(Vector3::from(g), Vector3::zeros(), Vector3::from(d));
            prop_assert_eq!(
                doppler_shift(&s, AccelerationKind::Gravitational) + gravitational_redshift(&s),
                0.0
            );
        }

        #[test]
        fn total_ignores_field(
            g in prop::array::uniform3(-100.0f64..100.0),
            delta in prop::array::uniform3(-100.0f64..100.0),
            a in prop::array::uniform3(-20.0f64..20.0),
            d in prop::array::uniform3(-1e3f64..1e3),
        ) {
            let (a, d) = (Vector3::from(a), Vector3::from(d));
            let g = Vector3::from(g);
            let b1 = shift_budget(&pair(g, a, d));
            let b2 = shift_budget(&pair(g + Vector3::from(delta), a, d));
            prop_assert_eq!(b1.total, b2.total);
            prop_assert_eq!(b1.total, a.dot(&d) / C2);
        }

        #[test]
        fn total_is_linear(
            a in prop::array::uniform3(-20.0f64..20.0),
            d in prop::array::uniform3(-1e3f64..1e3),
            s in -10.0f64..10.0,
        ) {
            let (a, d) = (Vector3::from(a), Vector3::from(d));
            let g = vz(-9.8);
            let base = shift_budget(&pair(g, a, d)).total;
            let tol = 1e-14 * (a.norm() * d.norm() / C2) * s.abs().max(1.0);
            let scaled_d = shift_budget(&pair(g, a, d * s)).total;
            prop_assert!((scaled_d - s * base).abs() <= tol);
            let scaled_a = shift_budget(&pair(g, a * s, d)).total;
            prop_assert!((scaled_a - s * base).abs() <= tol);
            let sum = shift_budget(&pair(g, a, d + d)).total;
            prop_assert!((sum - 2.0 * base).abs() <= tol);
        }

        #[test]
        fn exact_rate_difference_is_first_order(log_eps in -18.0f64..-9.0, theta in 0.0f64..3.14159) {
            // |a_G·d|/c² = 10^log_eps, detector at the origin
            let eps = 10f64.powf(log_eps);
            let g = Vector3::new(theta.sin(), 0.0, theta.cos()) * 9.8;
            let d_len = eps * C2 / 9.8;
            let d = Vector3::new(0.0, 0.0, d_len);
            let m = MetricUgf::new(g);
            let first = g.dot(&d) / C2;
            let exact = proper_time_rate_difference(&m, &Vector3::zeros(), &d, &Vector3::zeros()).unwrap();
            prop_assert!((exact - first).abs() <= first.abs() * eps * eps);
        }
    }
}
