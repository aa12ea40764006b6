//! Pulse sequences and interferometer arm trajectories.
//!
//! Interferometry is one-dimensional along the z axis: every laser kick is
//! `ħ δk ẑ / m` and phases use z components only. Bodies still move in 3D.

use nalgebra::Vector3;

use crate::exact::{to_f64, ExactVec3};
use crate::fields::GravityModel;
use crate::kinematics::{
    linear_combination, propagate, propagate_with_impulses, Impulse, NonGravProfile,
    ParticleState, PathKind, PropagationOptions, Trajectory,
};
use crate::{Error, Result};

/// One laser-grating interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    /// Pulse time, s.
    pub time: f64,
    /// Effective wavevector along z, 1/m.
    pub wavevector: f64,
    /// Phase-reference coefficient `c_i`.
    pub coefficient: i32,
    /// Wavevector transferred to the upper arm, 1/m.
    pub kick_upper: f64,
    /// Wavevector transferred to the lower arm, 1/m.
    pub kick_lower: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
}

impl PulseSequence {
    /// Pulse times must be finite and strictly increasing.
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::domain("pulse sequence is empty"));
        }
        for (i, p) in pulses.iter().enumerate() {
            let finite = [p.time, p.wavevector, p.kick_upper, p.kick_lower]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::domain(format!("pulse {i} has non-finite parameters")));
            }
            if i > 0 && p.time <= pulses[i - 1].time {
                return Err(Error::domain(format!(
                    "pulse times must be strictly increasing (pulse {i} at {} after {})",
                    p.time,
                    pulses[i - 1].time
                )));
            }
        }
        Ok(Self { pulses })
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn start_time(&self) -> f64 {
        self.pulses[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.pulses[self.pulses.len() - 1].time
    }

    pub fn coefficient_sum(&self) -> i64 {
        self.pulses.iter().map(|p| p.coefficient as i64).sum()
    }

    /// `Σ cᵢ = 0`: the phase ignores a common offset of the midpoint.
    pub fn is_offset_insensitive(&self) -> bool {
        self.coefficient_sum() == 0
    }

    /// Net wavevector delivered to each arm over the sequence, (upper, lower).
    pub fn net_kicks(&self) -> (f64, f64) {
        self.pulses
            .iter()
            .fold((0.0, 0.0), |(u, l), p| (u + p.kick_upper, l + p.kick_lower))
    }
}

/// How the beamsplitter momentum is shared between the arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KickConvention {
    /// ±ħk/2 on the two arms.
    #[default]
    Symmetric,
    /// ħk on the upper arm, nothing on the lower one.
    Asymmetric,
}

/// Three-pulse Mach-Zehnder sequence of total duration `2T`, symmetric kicks.
pub fn build_mach_zehnder(k: f64, t: f64) -> Result<PulseSequence> {
    build_mach_zehnder_with(k, t, KickConvention::Symmetric)
}

pub fn build_mach_zehnder_with(k: f64, t: f64, convention: KickConvention) -> Result<PulseSequence> {
    if !k.is_finite() || k == 0.0 {
        return Err(Error::domain(format!("wavevector k must be finite and nonzero, got {k}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("pulse separation T must be > 0, got {t}")));
    }
    let kicks = match convention {
        KickConvention::Symmetric => [(0.5 * k, -0.5 * k), (-k, k), (0.5 * k, -0.5 * k)],
        KickConvention::Asymmetric => [(k, 0.0), (-k, k), (0.0, -k)],
    };
    let times = [0.0, t, 2.0 * t];
    let coefficients = [1, -2, 1];
    let pulses = (0..3)
        .map(|i| Pulse {
            time: times[i],
            wavevector: k,
            coefficient: coefficients[i],
            kick_upper: kicks[i].0,
            kick_lower: kicks[i].1,
        })
        .collect();
    PulseSequence::new(pulses)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    /// Atomic mass, kg.
    pub mass: f64,
    pub initial: ParticleState,
}

impl AtomSpec {
    pub fn new(mass: f64, initial: ParticleState) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain(format!("atom mass must be > 0, got {mass}")));
        }
        Ok(Self { mass, initial })
    }
}

/// Retro-reflection mirror: the phase reference of the laser gratings.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorSpec {
    pub initial: ParticleState,
    pub ng: NonGravProfile,
}

impl MirrorSpec {
    pub fn free(initial: ParticleState) -> Self {
        Self {
            initial,
            ng: NonGravProfile::free_fall(),
        }
    }
}

/// Arm mismatch after the final pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closure {
    /// |x_u − x_l|, m.
    pub position: f64,
    /// |v_u − v_l|, m/s.
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmTrajectories {
    pub upper: Trajectory,
    pub lower: Trajectory,
    pub mirror: Trajectory,
    /// `(x_u + x_l)/2 − x_mirror`; its z component is z̄(t).
    pub midpoint: Trajectory,
    pub closure: Closure,
}

impl ArmTrajectories {
    pub fn kind(&self) -> PathKind {
        self.upper.kind()
    }

    /// z̄ at `t`.
    pub fn midpoint_z(&self, t: f64) -> Result<f64> {
        Ok(self.midpoint.state_at(t)?.position.z)
    }
}

pub(crate) fn arm_impulses(seq: &PulseSequence, mass: f64) -> (Vec<Impulse>, Vec<Impulse>) {
    let kick = |t: f64, dk: f64| Impulse::recoil(t, Vector3::new(0.0, 0.0, dk), mass);
    seq.pulses()
        .iter()
        .map(|p| (kick(p.time, p.kick_upper), kick(p.time, p.kick_lower)))
        .unzip()
}

pub(crate) fn check_timing(seq: &PulseSequence, atom: &AtomSpec, mirror: &MirrorSpec) -> Result<()> {
    if atom.initial.time > seq.start_time() {
        return Err(Error::domain(format!(
            "atom state time {} is after the first pulse at {}",
            atom.initial.time,
            seq.start_time()
        )));
    }
    if mirror.initial.time > seq.start_time() {
        return Err(Error::domain(format!(
            "mirror state time {} is after the first pulse at {}",
            mirror.initial.time,
            seq.start_time()
        )));
    }
    Ok(())
}

/// Propagates both arms, kicking them at every pulse, and the mirror.
pub fn simulate_arms(
    seq: &PulseSequence,
    atom: &AtomSpec,
    mirror: &MirrorSpec,
    field: &GravityModel,
    options: &PropagationOptions,
) -> Result<ArmTrajectories> {
    check_timing(seq, atom, mirror)?;
    let end = seq.end_time();
    let (up_kicks, low_kicks) = arm_impulses(seq, atom.mass);
    let free = NonGravProfile::free_fall();
    let arm_duration = end - atom.initial.time;
    let upper = propagate_with_impulses(&atom.initial, arm_duration, field, &free, &up_kicks, options)?;
    let lower = propagate_with_impulses(&atom.initial, arm_duration, field, &free, &low_kicks, options)?;
    let mirror_traj = propagate(&mirror.initial, end - mirror.initial.time, field, &mirror.ng, options)?;
    let midpoint = linear_combination(&[(0.5, &upper), (0.5, &lower), (-1.0, &mirror_traj)])?;
    let closure = closure_at(&upper, &lower, end)?;
    Ok(ArmTrajectories {
        upper,
        lower,
        mirror: mirror_traj,
        midpoint,
        closure,
    })
}

fn closure_at(upper: &Trajectory, lower: &Trajectory, t: f64) -> Result<Closure> {
    if let (Some((xu, vu)), Some((xl, vl))) = (upper.exact_state_at(t), lower.exact_state_at(t)) {
        let dx: ExactVec3 = &xu - &xl;
        let dv: ExactVec3 = &vu - &vl;
        return Ok(Closure {
            position: norm_exact(&dx),
            velocity: norm_exact(&dv),
        });
    }
    let u = upper.state_at(t)?;
    let l = lower.state_at(t)?;
    Ok(Closure {
        position: (u.position - l.position).norm(),
        velocity: (u.velocity - l.velocity).norm(),
    })
}

fn norm_exact(v: &ExactVec3) -> f64 {
    to_f64(&v.dot(v)).sqrt()
}

/// True iff both closure residuals are within tolerance.
pub fn closure_check(arms: &ArmTrajectories, tol_x: f64, tol_v: f64) -> bool {
    arms.closure.position <= tol_x && arms.closure.velocity <= tol_v
}
