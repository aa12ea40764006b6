//! Exact rational arithmetic for closed-form trajectories.
//!
//! Every finite `f64` is a dyadic rational, so inputs convert without loss.
//! Results are rounded back to `f64` exactly once.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector3;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub(crate) type Exact = BigRational;

pub(crate) fn exact(x: f64) -> Exact {
    BigRational::from_float(x).unwrap_or_else(|| panic!("non-finite value {x} in exact path"))
}

pub(crate) fn int(n: i64) -> Exact {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn to_f64(x: &Exact) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ExactVec3(pub [Exact; 3]);

impl ExactVec3 {
    pub fn zero() -> Self {
        ExactVec3([Exact::zero(), Exact::zero(), Exact::zero()])
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        ExactVec3([exact(v.x), exact(v.y), exact(v.z)])
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(to_f64(&self.0[0]), to_f64(&self.0[1]), to_f64(&self.0[2]))
    }

    pub fn scale(&self, s: &Exact) -> Self {
        ExactVec3([&self.0[0] * s, &self.0[1] * s, &self.0[2] * s])
    }

    pub fn dot(&self, other: &Self) -> Exact {
        &self.0[0] * &other.0[0] + &self.0[1] * &other.0[1] + &self.0[2] * &other.0[2]
    }

    pub fn z(&self) -> &Exact {
        &self.0[2]
    }
}

impl<'a> Add<&'a ExactVec3> for &'a ExactVec3 {
    type Output = ExactVec3;
    fn add(self, rhs: &ExactVec3) -> ExactVec3 {
        ExactVec3([&self.0[0] + &rhs.0[0], &self.0[1] + &rhs.0[1], &self.0[2] + &rhs.0[2]])
    }
}

impl<'a> Sub<&'a ExactVec3> for &'a ExactVec3 {
    type Output = ExactVec3;
    fn sub(self, rhs: &ExactVec3) -> ExactVec3 {
        ExactVec3([&self.0[0] - &rhs.0[0], &self.0[1] - &rhs.0[1], &self.0[2] - &rhs.0[2]])
    }
}

impl<'a> Mul<&'a Exact> for &'a ExactVec3 {
    type Output = ExactVec3;
    fn mul(self, rhs: &Exact) -> ExactVec3 {
        self.scale(rhs)
    }
}

impl Neg for &ExactVec3 {
    type Output = ExactVec3;
    fn neg(self) -> ExactVec3 {
        ExactVec3([-&self.0[0], -&self.0[1], -&self.0[2]])
    }
}

/// Running sum with Neumaier compensation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip_is_exact() {
        for x in [0.0, 1.0, -9.8, 1.054_571_817e-34, 6.371e6, f64::MIN_POSITIVE] {
            assert_eq!(to_f64(&exact(x)), x);
        }
    }

    #[test]
    fn cancellation_survives() {
        let big = exact(4.5e8);
        let tiny = exact(1e-12);
        let r = &(&big + &tiny) - &big;
        assert_eq!(to_f64(&r), 1e-12);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
