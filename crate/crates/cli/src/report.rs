//! Running a scenario and presenting the result.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use ugfsim::{
    cross_validate, doppler_from_kinematics, em_probe_accelerations, gravimeter_reading,
    gravity_probe_accelerations, infer_field_difference, reconstruct_em_field, shift_budget,
    AccelerationKind, CrossValidation, EmField, FieldInference, GravityModel, Reconstruction,
    ShiftBudget,
};

use crate::error::CliError;
use crate::scenario::{ExperimentKind, Scenario};

/// Relative tolerance for the kinematic Doppler cross-check.
const DOPPLER_CHECK_RTOL: f64 = 1e-9;
/// Relative tolerance for the EM reconstruction round trip.
const EM_ROUND_TRIP_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravimeterOutcome {
    pub reading: f64,
    pub reading_without_field: f64,
    pub inference: Option<FieldInference>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmOutcome {
    pub truth: EmField,
    pub reconstruction: Reconstruction,
    pub relative_error: f64,
    /// Largest relative acceleration seen in the gravitational protocol.
    pub contrast_max: f64,
    pub contrast_field: EmField,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Interferometer(CrossValidation),
    ClockPair(ShiftBudget),
    Gravimeter(GravimeterOutcome),
    EmProbe(EmOutcome),
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: Scenario,
    pub outcome: Outcome,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub passed: bool,
    pub duration: Duration,
}

impl RunReport {
    /// Scenario as TOML; parses back to the same scenario.
    pub fn echo(&self) -> String {
        self.scenario.to_toml()
    }
}

pub fn run(scenario: &Scenario) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let kind = scenario
        .kind()
        .ok_or_else(|| CliError::Invalid(vec!["experiment: exactly one experiment kind required".into()]))?;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let outcome = match kind {
        ExperimentKind::Interferometer => {
            let s = scenario.interferometer_scenario()?;
            let cv = cross_validate(&s, &scenario.tolerances(), scenario.numerics.engine.engine_set())?;
            for c in &cv.comparisons {
                let name = format!("|{} - {}| rad", c.a.name(), c.b.name());
                if c.enforced {
                    checks.push(Check::new(name, c.delta, cv.tolerance));
                } else {
                    notes.push(format!("{name} = {:e} (not enforced)", c.delta));
                }
            }
            for (engine, phase) in [
                ("midpoint", cv.breakdown.midpoint),
                ("action", cv.breakdown.action.as_ref().map(|a| a.total)),
                ("perturbation", cv.breakdown.perturbation.as_ref().map(|p| p.total)),
            ] {
                if let Some(phi) = phase {
                    if !phi.is_finite() {
                        checks.push(Check::new(format!("{engine} phase finite"), f64::INFINITY, 0.0));
                    }
                }
            }
            notes.extend(cv.notes.iter().cloned());
            Outcome::Interferometer(cv)
        }
        ExperimentKind::ClockPair => {
            let s = scenario.clock_pair_scenario()?;
            let b = shift_budget(&s);
            checks.push(Check::new("|doppler_g + redshift|", (b.doppler_g + b.redshift).abs(), 0.0));
            checks.push(Check::new("|total - doppler_ng|", (b.total - b.doppler_ng).abs(), 0.0));
            let c2 = s.metric.c * s.metric.c;
            for (kind, label, formula, a) in [
                (AccelerationKind::Gravitational, "g", b.doppler_g, s.metric.a_g),
                (AccelerationKind::NonGravitational, "ng", b.doppler_ng, s.a_ng()),
            ] {
                let kin = doppler_from_kinematics(&s, kind)?;
                // relative to |a||d|/c², so perpendicular geometries are judged sensibly
                let scale = a.norm() * s.separation.norm() / c2;
                let value = if formula == kin { 0.0 } else { (formula - kin).abs() / scale };
                checks.push(Check::new(
                    format!("doppler_{label} kinematic cross-check (relative)"),
                    value,
                    DOPPLER_CHECK_RTOL,
                ));
            }
            notes.push("shifts are first order in v/c; positions are taken as lab coordinates".into());
            Outcome::ClockPair(b)
        }
        ExperimentKind::Gravimeter => {
            let spec = scenario.gravimeter.as_ref().expect("kind checked");
            let balance = scenario.spring_balance()?;
            let field = scenario.gravity_model();
            let reading = gravimeter_reading(&balance, &field, spec.time);
            let reading_without_field = gravimeter_reading(&balance, &GravityModel::zero(), spec.time);
            checks.push(Check::new("|reading - reading without field|", (reading - reading_without_field).abs(), 0.0));
            let inference = spec
                .inference
                .as_ref()
                .map(|inf| infer_field_difference(reading, inf.distance, inf.mu, inf.relative_position_error))
                .transpose()?;
            Outcome::Gravimeter(GravimeterOutcome {
                reading,
                reading_without_field,
                inference,
            })
        }
        ExperimentKind::EmProbe => {
            let spec = scenario.em_probe.as_ref().expect("kind checked");
            let truth = scenario.em_field().expect("kind checked");
            let velocities: Vec<Vector3<f64>> = spec.velocities.iter().map(|v| Vector3::from(*v)).collect();
            let acc = em_probe_accelerations(&truth, spec.charge_to_mass, &velocities);
            let meas: Vec<_> = velocities.iter().copied().zip(acc).collect();
            let reconstruction = reconstruct_em_field(&meas, spec.charge_to_mass)?;
            let scale = truth.e.norm().max(truth.b.norm());
            let err = (reconstruction.field.e - truth.e).norm().max((reconstruction.field.b - truth.b).norm());
            let relative_error = if err == 0.0 { 0.0 } else { err / scale };
            checks.push(Check::new("EM round trip (relative)", relative_error, EM_ROUND_TRIP_RTOL));

            let position = Vector3::from(spec.position);
            let grav = gravity_probe_accelerations(&scenario.gravity_model(), &position, &velocities)?;
            let contrast_max = grav.iter().map(|a| a.norm()).fold(0.0, f64::max);
            let grav_meas: Vec<_> = velocities.iter().copied().zip(grav).collect();
            let contrast_field = reconstruct_em_field(&grav_meas, spec.charge_to_mass)?.field;
            checks.push(Check::new("gravity probe relative acceleration", contrast_max, 0.0));
            checks.push(Check::new(
                "gravity protocol reconstructed field",
                contrast_field.e.norm() + contrast_field.b.norm(),
                0.0,
            ));
            notes.push(format!("{} probe shots; least-squares residual {:e} m/s^2", velocities.len(), reconstruction.residual));
            Outcome::EmProbe(EmOutcome {
                truth,
                reconstruction,
                relative_error,
                contrast_max,
                contrast_field,
            })
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(RunReport {
        scenario: scenario.clone(),
        outcome,
        checks,
        notes,
        passed,
        duration: started.elapsed(),
    })
}

/// Full-precision, locale-independent number formatting (17 significant
/// digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn csv_header(kind: ExperimentKind) -> Vec<&'static str> {
    let mut h = match kind {
        ExperimentKind::Interferometer => vec![
            "phi_midpoint_rad",
            "phi_action_rad",
            "phi_potential_rad",
            "phi_kinetic_rad",
            "phi_laser_rad",
            "phi_separation_rad",
            "phi_perturbation_rad",
            "phi_pert_potential_rad",
            "phi_pert_laser_rad",
            "max_delta_rad",
            "tolerance_rad",
            "closure_position_m",
            "closure_velocity_m_per_s",
        ],
        ExperimentKind::ClockPair => vec![
            "doppler_ng_fractional",
            "doppler_g_fractional",
            "redshift_fractional",
            "total_fractional",
            "doppler_ng_hz",
            "doppler_g_hz",
            "redshift_hz",
            "total_hz",
            "gravitational_pair_cancels",
        ],
        ExperimentKind::Gravimeter => vec![
            "reading_m_per_s2",
            "inferred_g_m_per_s2",
            "discrepancy_m_per_s2",
            "uncertainty_m_per_s2",
        ],
        ExperimentKind::EmProbe => vec![
            "e_x_v_per_m",
            "e_y_v_per_m",
            "e_z_v_per_m",
            "b_x_t",
            "b_y_t",
            "b_z_t",
            "residual_m_per_s2",
            "relative_error",
            "gravity_contrast_m_per_s2",
        ],
    };
    h.extend(["pass", "error"]);
    h
}

pub fn csv_cells(report: &RunReport) -> Vec<String> {
    let mut cells = match &report.outcome {
        Outcome::Interferometer(cv) => {
            let b = &cv.breakdown;
            let a = b.action.as_ref();
            let p = b.perturbation.as_ref();
            let max_delta = cv.comparisons.iter().map(|c| c.delta).fold(None, |m: Option<f64>, d| {
                Some(m.map_or(d, |m| m.max(d)))
            });
            vec![
                opt(b.midpoint),
                opt(a.map(|a| a.total)),
                opt(a.map(|a| a.potential)),
                opt(a.map(|a| a.kinetic)),
                opt(a.map(|a| a.laser)),
                opt(a.map(|a| a.separation)),
                opt(p.map(|p| p.total)),
                opt(p.map(|p| p.potential)),
                opt(p.map(|p| p.laser)),
                opt(max_delta),
                fmt_f64(cv.tolerance),
                fmt_f64(cv.closure.position),
                fmt_f64(cv.closure.velocity),
            ]
        }
        Outcome::ClockPair(b) => vec![
            fmt_f64(b.doppler_ng),
            fmt_f64(b.doppler_g),
            fmt_f64(b.redshift),
            fmt_f64(b.total),
            fmt_f64(b.doppler_ng_hz),
            fmt_f64(b.doppler_g_hz),
            fmt_f64(b.redshift_hz),
            fmt_f64(b.total_hz),
            b.gravitational_pair_cancels.to_string(),
        ],
        Outcome::Gravimeter(g) => vec![
            fmt_f64(g.reading),
            opt(g.inference.map(|i| i.inferred_g)),
            opt(g.inference.map(|i| i.discrepancy)),
            opt(g.inference.map(|i| i.uncertainty)),
        ],
        Outcome::EmProbe(e) => {
            let f = &e.reconstruction.field;
            vec![
                fmt_f64(f.e.x),
                fmt_f64(f.e.y),
                fmt_f64(f.e.z),
                fmt_f64(f.b.x),
                fmt_f64(f.b.y),
                fmt_f64(f.b.z),
                fmt_f64(e.reconstruction.residual),
                fmt_f64(e.relative_error),
                fmt_f64(e.contrast_max),
            ]
        }
    };
    cells.push(report.passed.to_string());
    cells.push(String::new());
    cells
}

/// Single-row CSV for a run.
pub fn run_csv(report: &RunReport) -> String {
    let kind = report.scenario.kind().expect("validated scenario");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(kind)).expect("in-memory write");
    w.write_record(csv_cells(report)).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Human-readable summary.
pub fn render(report: &RunReport) -> String {
    let mut out = String::new();
    let s = &report.scenario;
    let kind = s.kind().map_or("?", |k| k.name());
    let _ = writeln!(out, "scenario: {} ({kind})", s.name);
    if let Some(d) = &s.description {
        let _ = writeln!(out, "  {d}");
    }
    match &report.outcome {
        Outcome::Interferometer(cv) => {
            let b = &cv.breakdown;
            let _ = writeln!(out, "paths: {:?}, closure {:.3e} m / {:.3e} m/s", cv.kind, cv.closure.position, cv.closure.velocity);
            if let Some(m) = b.midpoint {
                let _ = writeln!(out, "  midpoint       {m:>+24.16e} rad");
            }
            if let Some(a) = &b.action {
                let _ = writeln!(out, "  action         {:>+24.16e} rad", a.total);
                let _ = writeln!(out, "    potential    {:>+24.16e}", a.potential);
                let _ = writeln!(out, "    kinetic      {:>+24.16e}", a.kinetic);
                let _ = writeln!(out, "    laser        {:>+24.16e}", a.laser);
                let _ = writeln!(out, "    separation   {:>+24.16e}", a.separation);
            }
            if let Some(p) = &b.perturbation {
                let tag = if p.first_order_only { " (first order only)" } else { "" };
                let _ = writeln!(out, "  perturbation   {:>+24.16e} rad{tag}", p.total);
                let _ = writeln!(out, "    potential    {:>+24.16e}", p.potential);
                let _ = writeln!(out, "    laser        {:>+24.16e}", p.laser);
            }
        }
        Outcome::ClockPair(b) => {
            let _ = writeln!(out, "  f0                  {:e} Hz", b.f0);
            let _ = writeln!(out, "  doppler (ng)        {:+e}  ({:+e} Hz)", b.doppler_ng, b.doppler_ng_hz);
            let _ = writeln!(out, "  doppler (g)         {:+e}  ({:+e} Hz)", b.doppler_g, b.doppler_g_hz);
            let _ = writeln!(out, "  redshift            {:+e}  ({:+e} Hz)", b.redshift, b.redshift_hz);
            let _ = writeln!(out, "  total               {:+e}  ({:+e} Hz)", b.total, b.total_hz);
            let pair = if b.gravitational_pair_cancels { "cancels" } else { "does not cancel" };
            let _ = writeln!(out, "  gravitational pair  {pair}");
        }
        Outcome::Gravimeter(g) => {
            let _ = writeln!(out, "  reading             {} m/s^2", g.reading);
            if let Some(i) = g.inference {
                let _ = writeln!(out, "  inferred g          {} +/- {} m/s^2", i.inferred_g, i.uncertainty);
                let _ = writeln!(out, "  discrepancy         {:e} m/s^2", i.discrepancy);
            }
        }
        Outcome::EmProbe(e) => {
            let f = &e.reconstruction.field;
            let _ = writeln!(out, "  E = [{:e}, {:e}, {:e}] V/m", f.e.x, f.e.y, f.e.z);
            let _ = writeln!(out, "  B = [{:e}, {:e}, {:e}] T", f.b.x, f.b.y, f.b.z);
            let _ = writeln!(out, "  relative error {:e}", e.relative_error);
        }
    }
    for c in &report.checks {
        let flag = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{flag}] {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(out, "result: {} in {:.3} s", if report.passed { "PASS" } else { "FAIL" }, report.duration.as_secs_f64());
    out
}
