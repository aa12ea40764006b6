//! Interferometer phase by three independent routes.
//!
//! * Midpoint rule: `Φ = Σ cᵢ kᵢ z̄(tᵢ)` on the simulated arms.
//! * Action difference: propagation phase `ΔS/ħ` split into potential and
//!   kinetic parts, plus the laser phase imprinted on each kicked arm and a
//!   separation phase when the arms do not recombine.
//! * First-order perturbation theory: potential phase along gravity-free
//!   arms, laser phase against the true (falling) mirror.
//!
//! On closed-form paths every quantity is evaluated in exact rational
//! arithmetic and rounded once at the end.

use log::warn;
use nalgebra::Vector3;

use crate::constants::HBAR;
use crate::exact::{exact, int, to_f64, CompensatedSum, Exact, ExactVec3};
use crate::fields::GravityModel;
use crate::interferometer::{
    arm_impulses, check_timing, simulate_arms, ArmTrajectories, AtomSpec, Closure, MirrorSpec,
    PulseSequence,
};
use crate::kinematics::{
    propagate, propagate_with_impulses, sort_dedup, step_count, grid_time, NonGravProfile,
    PathKind, PropagationOptions, Trajectory,
};
use crate::Result;

/// Closure residual above which the arms count as open, closed-form paths.
pub const CLOSED_FORM_CLOSURE_TOL: f64 = 1e-12;
/// Same for integrated paths.
pub const INTEGRATED_CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionPhase {
    /// φ_V = −(m/ħ)∫[V(z_u) − V(z_l)]dt, rad.
    pub potential: f64,
    /// φ_T = (m/2ħ)∫[v_u² − v_l²]dt, rad.
    pub kinetic: f64,
    /// Σ over pulses of δk·(arm − mirror) for each kicked arm, rad.
    pub laser: f64,
    /// −p̄·(x_u − x_l)/ħ after the last pulse, rad. Zero for a closed
    /// interferometer or when disabled. Even a residual gap well below the
    /// closure tolerance contributes at the m/ħ ~ 1e9 scale.
    pub separation: f64,
    pub total: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPhase {
    /// −(m/ħ)∫[V(z⁰_u) − V(z⁰_l)]dt along the gravity-free arms, rad.
    pub potential: f64,
    /// Σ cᵢ kᵢ (z̄⁰(tᵢ) − z_mirror(tᵢ)), rad.
    pub laser: f64,
    pub total: f64,
    /// Set when the field is not uniform: the result is only the lowest
    /// order and is not expected to match the other engines.
    pub first_order_only: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseBreakdown {
    pub midpoint: Option<f64>,
    pub action: Option<ActionPhase>,
    pub perturbation: Option<PerturbationPhase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Midpoint,
    Action,
    Perturbation,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Midpoint => "midpoint",
            Engine::Action => "action",
            Engine::Perturbation => "perturbation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineSet {
    pub midpoint: bool,
    pub action: bool,
    pub perturbation: bool,
}

impl EngineSet {
    pub fn all() -> Self {
        Self {
            midpoint: true,
            action: true,
            perturbation: true,
        }
    }

    pub fn only(engine: Engine) -> Self {
        Self {
            midpoint: engine == Engine::Midpoint,
            action: engine == Engine::Action,
            perturbation: engine == Engine::Perturbation,
        }
    }
}

impl Default for EngineSet {
    fn default() -> Self {
        Self::all()
    }
}

/// Absolute agreement tolerances between engines, rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub closed_form: f64,
    pub integrated: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            closed_form: 1e-9,
            integrated: 1e-6,
        }
    }
}

/// Everything needed to run an interferometer through all engines.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerScenario {
    pub sequence: PulseSequence,
    pub atom: AtomSpec,
    pub mirror: MirrorSpec,
    pub field: GravityModel,
    pub propagation: PropagationOptions,
    pub separation_phase: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineComparison {
    pub a: Engine,
    pub b: Engine,
    /// |Φ_a − Φ_b|, rad.
    pub delta: f64,
    pub within_tolerance: bool,
    /// False when the comparison is informational only (first-order
    /// perturbation result in a non-uniform field).
    pub enforced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub breakdown: PhaseBreakdown,
    pub kind: PathKind,
    pub closure: Closure,
    pub tolerance: f64,
    pub comparisons: Vec<EngineComparison>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl CrossValidation {
    pub fn phase(&self, engine: Engine) -> Option<f64> {
        match engine {
            Engine::Midpoint => self.breakdown.midpoint,
            Engine::Action => self.breakdown.action.as_ref().map(|a| a.total),
            Engine::Perturbation => self.breakdown.perturbation.as_ref().map(|p| p.total),
        }
    }
}

fn mass_over_hbar(mass: f64) -> Exact {
    exact(mass) / exact(HBAR)
}

/// Midpoint rule `Σ cᵢ kᵢ z̄(tᵢ)`.
pub fn phase_midpoint(seq: &PulseSequence, arms: &ArmTrajectories) -> Result<f64> {
    if arms.midpoint.kind() == PathKind::ClosedForm {
        let mut sum = int(0);
        for p in seq.pulses() {
            let (x, _) = arms.midpoint.exact_state_at(p.time).ok_or_else(|| {
                crate::Error::domain(format!("pulse at {} outside midpoint trajectory", p.time))
            })?;
            sum += int(p.coefficient as i64) * exact(p.wavevector) * x.z();
        }
        return Ok(to_f64(&sum));
    }
    let mut sum = CompensatedSum::default();
    for p in seq.pulses() {
        sum.add(p.coefficient as f64 * p.wavevector * arms.midpoint_z(p.time)?);
    }
    Ok(sum.value())
}

/// Propagation phase from the classical action difference plus laser and
/// separation phases.
pub fn phase_action(
    seq: &PulseSequence,
    arms: &ArmTrajectories,
    atom: &AtomSpec,
    field: &GravityModel,
    separation_phase: bool,
) -> Result<ActionPhase> {
    let closure_tol = match arms.kind() {
        PathKind::ClosedForm => CLOSED_FORM_CLOSURE_TOL,
        PathKind::Integrated => INTEGRATED_CLOSURE_TOL,
    };
    let open = arms.closure.position > closure_tol;
    let mut notes = Vec::new();
    if open {
        if separation_phase {
            notes.push(format!(
                "interferometer open by {:.3e} m; separation phase included",
                arms.closure.position
            ));
        } else {
            let msg = format!(
                "interferometer open by {:.3e} m but separation phase is disabled",
                arms.closure.position
            );
            warn!("{msg}");
            notes.push(msg);
        }
    }
    let include_sep = separation_phase;

    let all_exact = arms.upper.kind() == PathKind::ClosedForm
        && arms.lower.kind() == PathKind::ClosedForm
        && arms.mirror.kind() == PathKind::ClosedForm;
    match field.uniform_acceleration() {
        Some(a_g) if all_exact => {
            Ok(action_exact(seq, arms, atom.mass, &a_g, include_sep, notes))
        }
        _ => action_sampled(seq, arms, atom.mass, field, include_sep, notes),
    }
}

fn action_exact(
    seq: &PulseSequence,
    arms: &ArmTrajectories,
    mass: f64,
    a_g: &Vector3<f64>,
    include_sep: bool,
    notes: Vec<String>,
) -> ActionPhase {
    let m_hbar = mass_over_hbar(mass);
    let a_g = ExactVec3::from_vector(a_g);
    let half = int(1) / int(2);
    let third = int(1) / int(3);
    let sixth = int(1) / int(6);

    let mut times: Vec<f64> = arms
        .upper
        .breakpoints()
        .iter()
        .chain(arms.lower.breakpoints())
        .copied()
        .collect();
    sort_dedup(&mut times);

    let mut kinetic = int(0);
    let mut separation_integral = ExactVec3::zero();
    for w in times.windows(2) {
        let (p, q) = (w[0], w[1]);
        let pu = arms.upper.piece_over(p, q).expect("upper arm covers window");
        let pl = arms.lower.piece_over(p, q).expect("lower arm covers window");
        let (xu, vu) = pu.state(p);
        let (xl, vl) = pl.state(p);
        let h = exact(q) - exact(p);
        let h2 = &h * &h;
        let h3 = &h2 * &h;
        // ∫ v² over a constant-acceleration piece: v₀²h + (v₀·a)h² + a²h³/3
        let ku = vu.dot(&vu) * &h + vu.dot(&pu.a) * &h2 + pu.a.dot(&pu.a) * &h3 * &third;
        let kl = vl.dot(&vl) * &h + vl.dot(&pl.a) * &h2 + pl.a.dot(&pl.a) * &h3 * &third;
        kinetic += (ku - kl) * &half;
        // ∫ (x_u − x_l) dt
        let dx = &xu - &xl;
        let dv = &vu - &vl;
        let da = &pu.a - &pl.a;
        let seg = &(&dx.scale(&h) + &dv.scale(&(&h2 * &half))) + &da.scale(&(&h3 * &sixth));
        separation_integral = &separation_integral + &seg;
    }
    // −∫ΔV with V = −a_G·(x − x_ref)
    let potential = &m_hbar * a_g.dot(&separation_integral);
    let kinetic = &m_hbar * kinetic;

    let mut laser = int(0);
    for p in seq.pulses() {
        let (xu, _) = arms.upper.exact_state_at(p.time).expect("pulse within upper arm");
        let (xl, _) = arms.lower.exact_state_at(p.time).expect("pulse within lower arm");
        let (xm, _) = arms.mirror.exact_state_at(p.time).expect("pulse within mirror");
        laser += exact(p.kick_upper) * (xu.z() - xm.z()) - exact(p.kick_lower) * (xl.z() - xm.z());
    }

    let separation = if include_sep {
        let end = seq.end_time();
        let (xu, vu) = arms.upper.exact_state_at(end).expect("end within upper arm");
        let (xl, vl) = arms.lower.exact_state_at(end).expect("end within lower arm");
        let mean_v = (&vu + &vl).scale(&half);
        -(&m_hbar * mean_v.dot(&(&xu - &xl)))
    } else {
        int(0)
    };

    let total = &potential + &kinetic + &laser + &separation;
    ActionPhase {
        potential: to_f64(&potential),
        kinetic: to_f64(&kinetic),
        laser: to_f64(&laser),
        separation: to_f64(&separation),
        total: to_f64(&total),
        notes,
    }
}

fn action_sampled(
    seq: &PulseSequence,
    arms: &ArmTrajectories,
    mass: f64,
    field: &GravityModel,
    include_sep: bool,
    notes: Vec<String>,
) -> Result<ActionPhase> {
    let m_hbar = mass / HBAR;
    let mut times: Vec<f64> = arms
        .upper
        .breakpoints()
        .iter()
        .chain(arms.lower.breakpoints())
        .copied()
        .collect();
    sort_dedup(&mut times);

    let mut kinetic = CompensatedSum::default();
    let mut potential = CompensatedSum::default();
    for w in times.windows(2) {
        let (p, q) = (w[0], w[1]);
        let nodes = window_nodes(&arms.upper, p, q);
        let mut kin_vals = Vec::with_capacity(nodes.len());
        let mut pot_vals = Vec::with_capacity(nodes.len());
        for (j, &t) in nodes.iter().enumerate() {
            let (u, l) = if j == nodes.len() - 1 {
                (arms.upper.state_before(t)?, arms.lower.state_before(t)?)
            } else {
                (arms.upper.state_at(t)?, arms.lower.state_at(t)?)
            };
            kin_vals.push(0.5 * (u.velocity - l.velocity).dot(&(u.velocity + l.velocity)));
            pot_vals.push(-field.potential_difference(&u.position, &l.position)?);
        }
        let h = (q - p) / (nodes.len() - 1) as f64;
        kinetic.add(composite_simpson(&kin_vals, h));
        potential.add(composite_simpson(&pot_vals, h));
    }
    let kinetic = m_hbar * kinetic.value();
    let potential = m_hbar * potential.value();

    let mut laser = CompensatedSum::default();
    for p in seq.pulses() {
        let zm = arms.mirror.state_at(p.time)?.position.z;
        let zu = arms.upper.state_at(p.time)?.position.z;
        let zl = arms.lower.state_at(p.time)?.position.z;
        laser.add(p.kick_upper * (zu - zm));
        laser.add(-p.kick_lower * (zl - zm));
    }
    let laser = laser.value();

    let separation = if include_sep {
        let end = seq.end_time();
        let u = arms.upper.state_at(end)?;
        let l = arms.lower.state_at(end)?;
        -m_hbar * (0.5 * (u.velocity + l.velocity)).dot(&(u.position - l.position))
    } else {
        0.0
    };

    let mut total = CompensatedSum::default();
    for term in [potential, kinetic, laser, separation] {
        total.add(term);
    }
    Ok(ActionPhase {
        potential,
        kinetic,
        laser,
        separation,
        total: total.value(),
        notes,
    })
}

/// Quadrature nodes on `[p, q]`: the trajectory's own samples when it has a
/// uniform grid there, otherwise a fresh even grid.
fn window_nodes(traj: &Trajectory, p: f64, q: f64) -> Vec<f64> {
    let mut nodes: Vec<f64> = traj
        .samples()
        .iter()
        .map(|s| s.time)
        .filter(|&t| t >= p && t <= q)
        .collect();
    sort_dedup(&mut nodes);
    if nodes.first() != Some(&p) || nodes.last() != Some(&q) || nodes.len() < 3 {
        let n = step_count(q - p, (q - p) / 2.0);
        nodes = (0..=n).map(|j| grid_time(p, q, j, n)).collect();
    }
    nodes
}

/// Composite Simpson on equally spaced values; a 3/8 panel absorbs an odd
/// interval count.
pub(crate) fn composite_simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let simpson_end = if n % 2 == 0 { n } else { n - 3 };
            let mut sum = CompensatedSum::default();
            for i in (0..simpson_end).step_by(2) {
                sum.add(h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]));
            }
            if n % 2 == 1 {
                let i = n - 3;
                sum.add(
                    3.0 * h / 8.0
                        * (values[i] + 3.0 * values[i + 1] + 3.0 * values[i + 2] + values[i + 3]),
                );
            }
            sum.value()
        }
    }
}

/// First-order perturbation theory around gravity-free arms.
pub fn phase_perturbation(
    seq: &PulseSequence,
    atom: &AtomSpec,
    mirror: &MirrorSpec,
    field: &GravityModel,
    options: &PropagationOptions,
) -> Result<PerturbationPhase> {
    check_timing(seq, atom, mirror)?;
    let end = seq.end_time();
    let (up_kicks, low_kicks) = arm_impulses(seq, atom.mass);
    let free = NonGravProfile::free_fall();
    let zero = GravityModel::zero();
    let closed = PropagationOptions {
        force_numerical: false,
        ..*options
    };
    let duration = end - atom.initial.time;
    let upper0 = propagate_with_impulses(&atom.initial, duration, &zero, &free, &up_kicks, &closed)?;
    let lower0 = propagate_with_impulses(&atom.initial, duration, &zero, &free, &low_kicks, &closed)?;
    let mirror_traj = propagate(&mirror.initial, end - mirror.initial.time, field, &mirror.ng, options)?;
    let m_hbar = mass_over_hbar(atom.mass);

    let mut times: Vec<f64> = upper0
        .breakpoints()
        .iter()
        .chain(lower0.breakpoints())
        .copied()
        .collect();
    sort_dedup(&mut times);

    let potential: Exact = match field.uniform_acceleration() {
        Some(a_g) => {
            let a_g = ExactVec3::from_vector(&a_g);
            let half = int(1) / int(2);
            let mut integral = ExactVec3::zero();
            for w in times.windows(2) {
                let (p, q) = (w[0], w[1]);
                let pu = upper0.piece_over(p, q).expect("upper covers window");
                let pl = lower0.piece_over(p, q).expect("lower covers window");
                let (xu, vu) = pu.state(p);
                let (xl, vl) = pl.state(p);
                let h = exact(q) - exact(p);
                let seg = &(&xu - &xl).scale(&h) + &(&vu - &vl).scale(&(&h * &h * &half));
                integral = &integral + &seg;
            }
            &m_hbar * a_g.dot(&integral)
        }
        None => {
            let mut sum = CompensatedSum::default();
            for w in times.windows(2) {
                let (p, q) = (w[0], w[1]);
                let pu = upper0.piece_over(p, q).expect("upper covers window");
                let pl = lower0.piece_over(p, q).expect("lower covers window");
                let n = step_count(q - p, options.dt);
                let mut vals = Vec::with_capacity(n + 1);
                for j in 0..=n {
                    let t = grid_time(p, q, j, n);
                    let (xu, _) = pu.state(t);
                    let (xl, _) = pl.state(t);
                    vals.push(-field.potential_difference(&xu.to_vector(), &xl.to_vector())?);
                }
                sum.add(composite_simpson(&vals, (q - p) / n as f64));
            }
            &m_hbar * exact(sum.value())
        }
    };

    let laser: Exact = if mirror_traj.kind() == PathKind::ClosedForm {
        let mut sum = int(0);
        for p in seq.pulses() {
            let (xu, _) = upper0.exact_state_at(p.time).expect("pulse within arm");
            let (xl, _) = lower0.exact_state_at(p.time).expect("pulse within arm");
            let (xm, _) = mirror_traj.exact_state_at(p.time).expect("pulse within mirror");
            let mid = (xu.z() + xl.z()) * (int(1) / int(2));
            sum += int(p.coefficient as i64) * exact(p.wavevector) * (mid - xm.z());
        }
        sum
    } else {
        let mut sum = CompensatedSum::default();
        for p in seq.pulses() {
            let zu = upper0.state_at(p.time)?.position.z;
            let zl = lower0.state_at(p.time)?.position.z;
            let zm = mirror_traj.state_at(p.time)?.position.z;
            sum.add(p.coefficient as f64 * p.wavevector * (0.5 * (zu + zl) - zm));
        }
        exact(sum.value())
    };

    let total = &potential + &laser;
    Ok(PerturbationPhase {
        potential: to_f64(&potential),
        laser: to_f64(&laser),
        total: to_f64(&total),
        first_order_only: !field.is_uniform(),
    })
}

/// Runs the selected engines and compares every pair.
pub fn cross_validate(
    scenario: &InterferometerScenario,
    tolerances: &Tolerances,
    engines: EngineSet,
) -> Result<CrossValidation> {
    let s = scenario;
    let (arm_result, pert_result) = rayon::join(
        || -> Result<(ArmTrajectories, Option<f64>, Option<ActionPhase>)> {
            let arms = simulate_arms(&s.sequence, &s.atom, &s.mirror, &s.field, &s.propagation)?;
            let (mid, act) = rayon::join(
                || engines.midpoint.then(|| phase_midpoint(&s.sequence, &arms)).transpose(),
                || {
                    engines
                        .action
                        .then(|| phase_action(&s.sequence, &arms, &s.atom, &s.field, s.separation_phase))
                        .transpose()
                },
            );
            Ok((arms, mid?, act?))
        },
        || {
            engines
                .perturbation
                .then(|| phase_perturbation(&s.sequence, &s.atom, &s.mirror, &s.field, &s.propagation))
                .transpose()
        },
    );
    let (arms, midpoint, action) = arm_result?;
    let perturbation = pert_result?;

    let kind = arms.kind();
    let tolerance = match kind {
        PathKind::ClosedForm => tolerances.closed_form,
        PathKind::Integrated => tolerances.integrated,
    };
    let mut notes = Vec::new();
    if let Some(a) = &action {
        notes.extend(a.notes.iter().cloned());
        if a.separation != 0.0 {
            notes.push("separation phase is an extension for open interferometers".to_string());
        }
    }
    let first_order_only = perturbation.as_ref().is_some_and(|p| p.first_order_only);
    if perturbation.is_some() {
        notes.push(
            "perturbation laser phase uses the unperturbed midpoint against the true mirror"
                .to_string(),
        );
        if first_order_only {
            notes.push("perturbation engine is first-order only in a non-uniform field".to_string());
        }
    }
    if !s.sequence.is_offset_insensitive() {
        notes.push(format!(
            "coefficient sum is {}: phase depends on a common offset",
            s.sequence.coefficient_sum()
        ));
    }

    let breakdown = PhaseBreakdown {
        midpoint,
        action,
        perturbation,
    };
    let phases: Vec<(Engine, f64)> = [
        (Engine::Midpoint, breakdown.midpoint),
        (Engine::Action, breakdown.action.as_ref().map(|a| a.total)),
        (Engine::Perturbation, breakdown.perturbation.as_ref().map(|p| p.total)),
    ]
    .into_iter()
    .filter_map(|(e, v)| v.map(|v| (e, v)))
    .collect();

    let mut comparisons = Vec::new();
    for i in 0..phases.len() {
        for j in i + 1..phases.len() {
            let (a, pa) = phases[i];
            let (b, pb) = phases[j];
            let delta = (pa - pb).abs();
            let enforced = !(first_order_only && (a == Engine::Perturbation || b == Engine::Perturbation));
            comparisons.push(EngineComparison {
                a,
                b,
                delta,
                within_tolerance: delta <= tolerance,
                enforced,
            });
        }
    }
    let finite = phases.iter().all(|(_, v)| v.is_finite());
    let passed = finite && comparisons.iter().all(|c| c.within_tolerance || !c.enforced);
    Ok(CrossValidation {
        breakdown,
        kind,
        closure: arms.closure,
        tolerance,
        comparisons,
        passed,
        notes,
    })
}
