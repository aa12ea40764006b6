//! Classical point-body propagation.
//!
//! Bodies move under `G(x) + a_NG(t)` with a piecewise-constant
//! non-gravitational profile and optional instantaneous velocity kicks. In a
//! uniform field the motion is piecewise quadratic and is carried exactly as
//! rational polynomial pieces; any other field goes through a fixed-step RK4
//! integrator with compensated state updates.

use nalgebra::Vector3;

use crate::constants::{DEFAULT_DT, HBAR};
use crate::exact::{exact, int, Exact, ExactVec3};
use crate::fields::GravityModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub time: f64,
}

impl ParticleState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, time: f64) -> Self {
        Self {
            position,
            velocity,
            time,
        }
    }

    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self::new(position, Vector3::zeros(), 0.0)
    }

    fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.position.iter().all(|c| c.is_finite())
            && self.velocity.iter().all(|c| c.is_finite())
    }
}

/// Constant non-gravitational acceleration over `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NgSegment {
    pub start: f64,
    pub end: f64,
    pub acceleration: Vector3<f64>,
}

/// Piecewise-constant non-gravitational acceleration. Empty means free fall.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NonGravProfile {
    segments: Vec<NgSegment>,
}

impl NonGravProfile {
    pub fn free_fall() -> Self {
        Self::default()
    }

    /// Segments must be finite, non-empty, time-ordered and non-overlapping.
    pub fn new(segments: Vec<NgSegment>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite())
                || !s.acceleration.iter().all(|c| c.is_finite())
            {
                return Err(Error::domain(format!("ng segment {i} is not finite")));
            }
            if s.end <= s.start {
                return Err(Error::domain(format!(
                    "ng segment {i} has end {} <= start {}",
                    s.end, s.start
                )));
            }
            if i > 0 && s.start < segments[i - 1].end {
                return Err(Error::domain(format!(
                    "ng segment {i} overlaps or precedes segment {}",
                    i - 1
                )));
            }
        }
        Ok(Self { segments })
    }

    /// A single segment of constant acceleration.
    pub fn constant(start: f64, end: f64, acceleration: Vector3<f64>) -> Result<Self> {
        Self::new(vec![NgSegment {
            start,
            end,
            acceleration,
        }])
    }

    pub fn segments(&self) -> &[NgSegment] {
        &self.segments
    }

    pub fn is_free_fall(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn acceleration_at(&self, t: f64) -> Vector3<f64> {
        self.segments
            .iter()
            .find(|s| s.start <= t && t < s.end)
            .map(|s| s.acceleration)
            .unwrap_or_else(Vector3::zeros)
    }

    /// Pointwise sum of two profiles.
    pub fn superpose(&self, other: &NonGravProfile) -> NonGravProfile {
        let mut times: Vec<f64> = self
            .segments
            .iter()
            .chain(&other.segments)
            .flat_map(|s| [s.start, s.end])
            .collect();
        sort_dedup(&mut times);
        let segments = times
            .windows(2)
            .filter_map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let a = self.acceleration_at(mid) + other.acceleration_at(mid);
                (a != Vector3::zeros()).then_some(NgSegment {
                    start: w[0],
                    end: w[1],
                    acceleration: a,
                })
            })
            .collect();
        NonGravProfile { segments }
    }

    fn boundaries_within(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        self.segments
            .iter()
            .flat_map(|s| [s.start, s.end])
            .filter(move |&t| t > lo && t < hi)
    }
}

/// Instantaneous velocity change.
#[derive(Debug, Clone, PartialEq)]
pub struct Impulse {
    pub time: f64,
    kind: ImpulseKind,
}

#[derive(Debug, Clone, PartialEq)]
enum ImpulseKind {
    Velocity(Vector3<f64>),
    Recoil { wavevector: Vector3<f64>, mass: f64 },
}

impl Impulse {
    pub fn velocity(time: f64, delta_v: Vector3<f64>) -> Self {
        Self {
            time,
            kind: ImpulseKind::Velocity(delta_v),
        }
    }

    /// Photon recoil `ħ δk / m`. The closed-form path evaluates the ratio
    /// exactly.
    pub fn recoil(time: f64, wavevector: Vector3<f64>, mass: f64) -> Self {
        Self {
            time,
            kind: ImpulseKind::Recoil { wavevector, mass },
        }
    }

    pub fn delta_v(&self) -> Vector3<f64> {
        match &self.kind {
            ImpulseKind::Velocity(dv) => *dv,
            ImpulseKind::Recoil { wavevector, mass } => wavevector * (HBAR / mass),
        }
    }

    fn delta_v_exact(&self) -> ExactVec3 {
        match &self.kind {
            ImpulseKind::Velocity(dv) => ExactVec3::from_vector(dv),
            ImpulseKind::Recoil { wavevector, mass } => {
                let ratio = exact(HBAR) / exact(*mass);
                ExactVec3::from_vector(wavevector).scale(&ratio)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.time.is_finite()
            && match &self.kind {
                ImpulseKind::Velocity(dv) => dv.iter().all(|c| c.is_finite()),
                ImpulseKind::Recoil { wavevector, mass } => {
                    wavevector.iter().all(|c| c.is_finite()) && mass.is_finite() && *mass > 0.0
                }
            };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("impulse has non-finite data or non-positive mass"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Integrator step, s. Each smooth interval uses an even number of
    /// equal steps no longer than this.
    pub dt: f64,
    /// Integrate numerically even when a closed form exists.
    pub force_numerical: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            force_numerical: false,
        }
    }
}

impl PropagationOptions {
    pub fn numerical(dt: f64) -> Self {
        Self {
            dt,
            force_numerical: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    ClosedForm,
    Integrated,
}

/// Constant-acceleration piece over `[t0, t1]` with exact coefficients.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub x0: ExactVec3,
    pub v0: ExactVec3,
    pub a: ExactVec3,
}

impl Piece {
    pub fn state(&self, t: f64) -> (ExactVec3, ExactVec3) {
        let tau = exact(t) - exact(self.t0);
        let half = int(1) / int(2);
        let v = &self.v0 + &self.a.scale(&tau);
        let x = &(&self.x0 + &self.v0.scale(&tau)) + &self.a.scale(&(&tau * &tau * half));
        (x, v)
    }

    fn covers(&self, t: f64) -> bool {
        self.t0 <= t && t <= self.t1
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    ClosedForm(Vec<Piece>),
    Sampled,
}

/// Time-ordered samples of a body's state.
///
/// A repeated sample time marks an instantaneous kick: the first sample at
/// that time is the state just before, the last one the state just after.
/// [`Trajectory::state_at`] is right-continuous, [`Trajectory::state_before`]
/// returns the left limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<ParticleState>,
    breakpoints: Vec<f64>,
    repr: Repr,
}

impl Trajectory {
    pub fn samples(&self) -> &[ParticleState] {
        &self.samples
    }

    /// Times where the motion is not smooth: ends, kicks, profile switches.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].time
    }

    pub fn kind(&self) -> PathKind {
        match self.repr {
            Repr::ClosedForm(_) => PathKind::ClosedForm,
            Repr::Sampled => PathKind::Integrated,
        }
    }

    pub(crate) fn pieces(&self) -> Option<&[Piece]> {
        match &self.repr {
            Repr::ClosedForm(p) => Some(p),
            Repr::Sampled => None,
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if t.is_finite() && t >= self.start_time() && t <= self.end_time() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "time {t} outside trajectory domain [{}, {}]",
                self.start_time(),
                self.end_time()
            )))
        }
    }

    /// State at `t`; after the kick if one happens at `t`.
    pub fn state_at(&self, t: f64) -> Result<ParticleState> {
        self.check_domain(t)?;
        if let Some((x, v)) = self.exact_state_at(t) {
            return Ok(ParticleState::new(x.to_vector(), v.to_vector(), t));
        }
        let idx = self.samples.partition_point(|s| s.time <= t) - 1;
        if self.samples[idx].time == t {
            return Ok(self.samples[idx]);
        }
        Ok(hermite(&self.samples[idx], &self.samples[idx + 1], t))
    }

    /// State at `t`; before the kick if one happens at `t`.
    pub fn state_before(&self, t: f64) -> Result<ParticleState> {
        self.check_domain(t)?;
        if let Some((x, v)) = self.exact_state_before(t) {
            return Ok(ParticleState::new(x.to_vector(), v.to_vector(), t));
        }
        let idx = self.samples.partition_point(|s| s.time < t);
        if self.samples[idx].time == t {
            return Ok(self.samples[idx]);
        }
        Ok(hermite(&self.samples[idx - 1], &self.samples[idx], t))
    }

    pub(crate) fn exact_state_at(&self, t: f64) -> Option<(ExactVec3, ExactVec3)> {
        self.pieces()?
            .iter()
            .rev()
            .find(|p| p.covers(t))
            .map(|p| p.state(t))
    }

    pub(crate) fn exact_state_before(&self, t: f64) -> Option<(ExactVec3, ExactVec3)> {
        self.pieces()?
            .iter()
            .find(|p| p.covers(t))
            .map(|p| p.state(t))
    }

    /// The piece governing the open interval `(p, q)`.
    pub(crate) fn piece_over(&self, p: f64, q: f64) -> Option<&Piece> {
        self.pieces()?
            .iter()
            .find(|piece| piece.t0 <= p && piece.t1 >= q && piece.t1 > piece.t0)
    }

    fn from_pieces(pieces: Vec<Piece>) -> Self {
        let mut samples: Vec<ParticleState> = Vec::with_capacity(pieces.len() + 1);
        let mut push = |t: f64, (x, v): (ExactVec3, ExactVec3)| {
            let s = ParticleState::new(x.to_vector(), v.to_vector(), t);
            if samples.last() != Some(&s) {
                samples.push(s);
            }
        };
        for p in &pieces {
            push(p.t0, (p.x0.clone(), p.v0.clone()));
            if p.t1 > p.t0 {
                push(p.t1, p.state(p.t1));
            }
        }
        let mut breakpoints: Vec<f64> = pieces.iter().flat_map(|p| [p.t0, p.t1]).collect();
        sort_dedup(&mut breakpoints);
        Trajectory {
            samples,
            breakpoints,
            repr: Repr::ClosedForm(pieces),
        }
    }
}

fn hermite(a: &ParticleState, b: &ParticleState, t: f64) -> ParticleState {
    let h = b.time - a.time;
    let s = (t - a.time) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let position = a.position * h00 + a.velocity * (h10 * h) + b.position * h01 + b.velocity * (h11 * h);
    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = -d00;
    let d11 = 3.0 * s2 - 2.0 * s;
    let velocity = (a.position * d00 + b.position * d01) / h + a.velocity * d10 + b.velocity * d11;
    ParticleState::new(position, velocity, t)
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    v.dedup();
}

/// Number of equal steps for an interval: at least 2, even, each ≤ `dt`.
pub(crate) fn step_count(len: f64, dt: f64) -> usize {
    let n = (len / dt).ceil().max(2.0) as usize;
    n + n % 2
}

pub(crate) fn grid_time(a: f64, b: f64, j: usize, n: usize) -> f64 {
    if j == n {
        b
    } else {
        a + (b - a) * (j as f64 / n as f64)
    }
}

/// Propagates a body for `duration` seconds from `initial`.
pub fn propagate(
    initial: &ParticleState,
    duration: f64,
    field: &GravityModel,
    ng: &NonGravProfile,
    options: &PropagationOptions,
) -> Result<Trajectory> {
    propagate_with_impulses(initial, duration, field, ng, &[], options)
}

/// Like [`propagate`], applying instantaneous kicks at the impulse times.
///
/// Impulses must lie in `[initial.time, initial.time + duration]`.
pub fn propagate_with_impulses(
    initial: &ParticleState,
    duration: f64,
    field: &GravityModel,
    ng: &NonGravProfile,
    impulses: &[Impulse],
    options: &PropagationOptions,
) -> Result<Trajectory> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::domain(format!("duration must be finite and >= 0, got {duration}")));
    }
    if !initial.is_finite() {
        return Err(Error::domain("initial state is not finite"));
    }
    field.validate()?;
    let t0 = initial.time;
    let t_end = t0 + duration;
    for imp in impulses {
        imp.validate()?;
        if imp.time < t0 || imp.time > t_end {
            return Err(Error::domain(format!(
                "impulse at {} outside propagation window [{t0}, {t_end}]",
                imp.time
            )));
        }
    }
    let mut breaks: Vec<f64> = vec![t0, t_end];
    breaks.extend(impulses.iter().map(|i| i.time));
    breaks.extend(ng.boundaries_within(t0, t_end));
    sort_dedup(&mut breaks);

    match field.uniform_acceleration() {
        Some(a_g) if !options.force_numerical => Ok(closed_form(initial, &breaks, a_g, ng, impulses)),
        _ => {
            if !(options.dt > 0.0 && options.dt.is_finite()) {
                return Err(Error::domain(format!("integrator step must be > 0, got {}", options.dt)));
            }
            integrate(initial, &breaks, field, ng, impulses, options.dt)
        }
    }
}

fn closed_form(
    initial: &ParticleState,
    breaks: &[f64],
    a_g: Vector3<f64>,
    ng: &NonGravProfile,
    impulses: &[Impulse],
) -> Trajectory {
    let a_g = ExactVec3::from_vector(&a_g);
    let mut x = ExactVec3::from_vector(&initial.position);
    let mut v = ExactVec3::from_vector(&initial.velocity);
    let mut pieces: Vec<Piece> = Vec::new();
    let last = breaks.len() - 1;
    for (i, &b) in breaks.iter().enumerate() {
        let kicks: Vec<&Impulse> = impulses.iter().filter(|imp| imp.time == b).collect();
        if !kicks.is_empty() {
            if pieces.is_empty() {
                pieces.push(Piece {
                    t0: b,
                    t1: b,
                    x0: x.clone(),
                    v0: v.clone(),
                    a: ExactVec3::zero(),
                });
            }
            for k in kicks {
                v = &v + &k.delta_v_exact();
            }
            if i == last {
                pieces.push(Piece {
                    t0: b,
                    t1: b,
                    x0: x.clone(),
                    v0: v.clone(),
                    a: ExactVec3::zero(),
                });
            }
        }
        if i < last {
            let nb = breaks[i + 1];
            let a_ng = ExactVec3::from_vector(&ng.acceleration_at(0.5 * (b + nb)));
            let piece = Piece {
                t0: b,
                t1: nb,
                x0: x.clone(),
                v0: v.clone(),
                a: &a_g + &a_ng,
            };
            let (xn, vn) = piece.state(nb);
            x = xn;
            v = vn;
            pieces.push(piece);
        }
    }
    if pieces.is_empty() {
        pieces.push(Piece {
            t0: breaks[0],
            t1: breaks[0],
            x0: x,
            v0: v,
            a: ExactVec3::zero(),
        });
    }
    Trajectory::from_pieces(pieces)
}

/// Vector state with Kahan-compensated accumulation.
#[derive(Clone, Copy)]
struct Compensated {
    value: Vector3<f64>,
    carry: Vector3<f64>,
}

impl Compensated {
    fn new(value: Vector3<f64>) -> Self {
        Self {
            value,
            carry: Vector3::zeros(),
        }
    }

    fn add(&mut self, delta: Vector3<f64>) {
        let y = delta - self.carry;
        let t = self.value + y;
        self.carry = (t - self.value) - y;
        self.value = t;
    }
}

fn integrate(
    initial: &ParticleState,
    breaks: &[f64],
    field: &GravityModel,
    ng: &NonGravProfile,
    impulses: &[Impulse],
    dt: f64,
) -> Result<Trajectory> {
    let mut x = Compensated::new(initial.position);
    let mut v = Compensated::new(initial.velocity);
    let mut samples = vec![ParticleState::new(x.value, v.value, breaks[0])];
    let last = breaks.len() - 1;
    for (i, &b) in breaks.iter().enumerate() {
        let mut kicked = false;
        for imp in impulses.iter().filter(|imp| imp.time == b) {
            v.add(imp.delta_v());
            kicked = true;
        }
        if kicked {
            samples.push(ParticleState::new(x.value, v.value, b));
        }
        if i == last {
            break;
        }
        let nb = breaks[i + 1];
        let a_ng = ng.acceleration_at(0.5 * (b + nb));
        let accel = |pos: &Vector3<f64>| -> Result<Vector3<f64>> {
            Ok(field.acceleration_at(pos)? + a_ng)
        };
        let n = step_count(nb - b, dt);
        let mut t_prev = b;
        for j in 1..=n {
            let t = grid_time(b, nb, j, n);
            let h = t - t_prev;
            let (x0, v0) = (x.value, v.value);
            let k1x = v0;
            let k1v = accel(&x0)?;
            let k2x = v0 + k1v * (0.5 * h);
            let k2v = accel(&(x0 + k1x * (0.5 * h)))?;
            let k3x = v0 + k2v * (0.5 * h);
            let k3v = accel(&(x0 + k2x * (0.5 * h)))?;
            let k4x = v0 + k3v * h;
            let k4v = accel(&(x0 + k3x * h))?;
            x.add((k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0));
            v.add((k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0));
            samples.push(ParticleState::new(x.value, v.value, t));
            t_prev = t;
        }
    }
    Ok(Trajectory {
        samples,
        breakpoints: breaks.to_vec(),
        repr: Repr::Sampled,
    })
}

/// Pointwise difference `a − b` over the overlap of the two time domains.
pub fn relative_trajectory(a: &Trajectory, b: &Trajectory) -> Result<Trajectory> {
    linear_combination(&[(1.0, a), (-1.0, b)])
}

/// Pointwise `Σ cᵢ · trajectoryᵢ` over the common time domain.
///
/// Stays exact when every input is closed-form.
pub fn linear_combination(terms: &[(f64, &Trajectory)]) -> Result<Trajectory> {
    if terms.is_empty() {
        return Err(Error::domain("linear combination of zero trajectories"));
    }
    let lo = terms.iter().map(|(_, t)| t.start_time()).fold(f64::NEG_INFINITY, f64::max);
    let hi = terms.iter().map(|(_, t)| t.end_time()).fold(f64::INFINITY, f64::min);
    if lo > hi {
        return Err(Error::domain(format!(
            "trajectories have disjoint time domains (overlap would be [{lo}, {hi}])"
        )));
    }
    let mut breakpoints: Vec<f64> = terms
        .iter()
        .flat_map(|(_, t)| t.breakpoints().iter().copied())
        .filter(|&t| t >= lo && t <= hi)
        .chain([lo, hi])
        .collect();
    sort_dedup(&mut breakpoints);

    if terms.iter().all(|(_, t)| t.kind() == PathKind::ClosedForm) {
        return Ok(combine_exact(terms, &breakpoints));
    }

    let mut times: Vec<f64> = terms
        .iter()
        .flat_map(|(_, t)| t.samples().iter().map(|s| s.time))
        .filter(|&t| t >= lo && t <= hi)
        .collect();
    sort_dedup(&mut times);
    let mut samples = Vec::with_capacity(times.len());
    for &t in &times {
        let mut left = ParticleState::new(Vector3::zeros(), Vector3::zeros(), t);
        let mut right = left;
        for (c, traj) in terms {
            let l = traj.state_before(t)?;
            let r = traj.state_at(t)?;
            left.position += l.position * *c;
            left.velocity += l.velocity * *c;
            right.position += r.position * *c;
            right.velocity += r.velocity * *c;
        }
        samples.push(left);
        if right != left {
            samples.push(right);
        }
    }
    Ok(Trajectory {
        samples,
        breakpoints,
        repr: Repr::Sampled,
    })
}

fn combine_exact(terms: &[(f64, &Trajectory)], times: &[f64]) -> Trajectory {
    let coeffs: Vec<Exact> = terms.iter().map(|(c, _)| exact(*c)).collect();
    let combine = |states: Vec<(ExactVec3, ExactVec3)>| -> (ExactVec3, ExactVec3) {
        let mut x = ExactVec3::zero();
        let mut v = ExactVec3::zero();
        for ((xi, vi), c) in states.into_iter().zip(&coeffs) {
            x = &x + &xi.scale(c);
            v = &v + &vi.scale(c);
        }
        (x, v)
    };
    let lo = times[0];
    let hi = times[times.len() - 1];
    let mut pieces = Vec::new();

    let left_lo = combine(terms.iter().map(|(_, t)| t.exact_state_before(lo).unwrap()).collect());
    let right_lo = combine(terms.iter().map(|(_, t)| t.exact_state_at(lo).unwrap()).collect());
    let kicked_at_lo = left_lo != right_lo;
    if kicked_at_lo || lo == hi {
        pieces.push(Piece {
            t0: lo,
            t1: lo,
            x0: left_lo.0,
            v0: left_lo.1,
            a: ExactVec3::zero(),
        });
    }
    for w in times.windows(2) {
        let (p, q) = (w[0], w[1]);
        let mut x = ExactVec3::zero();
        let mut v = ExactVec3::zero();
        let mut a = ExactVec3::zero();
        for ((_, traj), c) in terms.iter().zip(&coeffs) {
            let piece = traj.piece_over(p, q).expect("closed-form trajectory covers overlap");
            let (xi, vi) = piece.state(p);
            x = &x + &xi.scale(c);
            v = &v + &vi.scale(c);
            a = &a + &piece.a.scale(c);
        }
        pieces.push(Piece { t0: p, t1: q, x0: x, v0: v, a });
    }
    if lo < hi {
        let left_hi = combine(terms.iter().map(|(_, t)| t.exact_state_before(hi).unwrap()).collect());
        let right_hi = combine(terms.iter().map(|(_, t)| t.exact_state_at(hi).unwrap()).collect());
        if left_hi != right_hi {
            pieces.push(Piece {
                t0: hi,
                t1: hi,
                x0: right_hi.0,
                v0: right_hi.1,
                a: ExactVec3::zero(),
            });
        }
    } else if kicked_at_lo {
        pieces.push(Piece {
            t0: lo,
            t1: lo,
            x0: right_lo.0,
            v0: right_lo.1,
            a: ExactVec3::zero(),
        });
    }
    Trajectory::from_pieces(pieces)
}
