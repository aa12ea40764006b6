//! Scenario documents.
//!
//! A scenario is a TOML document with a `[field]` table, optional
//! `[numerics]` and `[sweep]` tables and exactly one experiment table out of
//! `[interferometer]`, `[clock_pair]`, `[gravimeter]` and `[em_probe]`. All
//! quantities are SI.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use ugfsim::{
    build_mach_zehnder_with, AtomSpec, ClockPairScenario, EmField, EngineSet, GravityModel,
    InterferometerScenario, KickConvention, MetricUgf, MirrorSpec, NgSegment, NonGravProfile,
    ParticleState, PropagationOptions, Pulse, PulseSequence, SpringBalance, Tolerances,
};

use crate::error::CliError;
use crate::sweep::{get_path, SweepSpec};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub field: FieldSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interferometer: Option<InterferometerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_pair: Option<ClockPairSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravimeter: Option<GravimeterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_probe: Option<EmProbeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Uniform {
        acceleration: Vec3,
    },
    LinearGradient {
        acceleration: Vec3,
        /// Γ in `a(x) = a + Γ(x − reference)`, 1/s².
        gradient: [Vec3; 3],
        #[serde(default)]
        reference: Vec3,
    },
    PointMass {
        /// GM, m³/s².
        mu: f64,
        center: Vec3,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Midpoint,
    Action,
    Perturbation,
    #[default]
    All,
}

impl EngineChoice {
    pub fn engine_set(self) -> EngineSet {
        match self {
            EngineChoice::Midpoint => EngineSet::only(ugfsim::Engine::Midpoint),
            EngineChoice::Action => EngineSet::only(ugfsim::Engine::Action),
            EngineChoice::Perturbation => EngineSet::only(ugfsim::Engine::Perturbation),
            EngineChoice::All => EngineSet::all(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Integrator step, s.
    pub dt: f64,
    pub force_numerical: bool,
    /// Engine agreement tolerances, rad.
    pub tol_closed_form: f64,
    pub tol_integrated: f64,
    pub engine: EngineChoice,
    pub separation_phase: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        let tol = Tolerances::default();
        Self {
            dt: ugfsim::constants::DEFAULT_DT,
            force_numerical: false,
            tol_closed_form: tol.closed_form,
            tol_integrated: tol.integrated,
            engine: EngineChoice::All,
            separation_phase: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KickChoice {
    #[default]
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub start: f64,
    pub end: f64,
    pub acceleration: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub time: f64,
    pub k: f64,
    pub coefficient: i32,
    pub kick_upper: f64,
    pub kick_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MirrorDoc {
    #[serde(default)]
    pub position: Vec3,
    #[serde(default)]
    pub velocity: Vec3,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ng: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerSpec {
    /// Effective wavevector for the Mach-Zehnder shorthand, 1/m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Pulse separation for the Mach-Zehnder shorthand, s.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub mass: f64,
    #[serde(default)]
    pub position: Vec3,
    #[serde(default)]
    pub velocity: Vec3,
    #[serde(default)]
    pub kick_convention: KickChoice,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<PulseSpec>,
    #[serde(default)]
    pub mirror: MirrorDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockPairSpec {
    #[serde(default)]
    pub detector_position: Vec3,
    #[serde(default)]
    pub velocity: Vec3,
    /// Source minus detector, m.
    pub separation: Vec3,
    pub f0: f64,
    #[serde(default)]
    pub time: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ng: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSpec {
    pub mu: f64,
    pub distance: f64,
    #[serde(default)]
    pub relative_position_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravimeterSpec {
    #[serde(default)]
    pub position: Vec3,
    #[serde(default)]
    pub velocity: Vec3,
    #[serde(default)]
    pub time: f64,
    #[serde(default)]
    pub resolution: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ng: Vec<SegmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inference: Option<InferenceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmProbeSpec {
    /// q/m, C/kg.
    pub charge_to_mass: f64,
    /// Field to forward-simulate, V/m and T.
    pub e: Vec3,
    pub b: Vec3,
    pub velocities: Vec<Vec3>,
    /// Where the gravitational contrast protocol is run.
    #[serde(default)]
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Interferometer,
    ClockPair,
    Gravimeter,
    EmProbe,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Interferometer => "interferometer",
            ExperimentKind::ClockPair => "clock_pair",
            ExperimentKind::Gravimeter => "gravimeter",
            ExperimentKind::EmProbe => "em_probe",
        }
    }
}

/// Command-line overrides applied on top of a document.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub engine: Option<EngineChoice>,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

fn vec3(v: &Vec3) -> Vector3<f64> {
    Vector3::from(*v)
}

fn finite3(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn profile(segments: &[SegmentSpec]) -> ugfsim::Result<NonGravProfile> {
    NonGravProfile::new(
        segments
            .iter()
            .map(|s| NgSegment {
                start: s.start,
                end: s.end,
                acceleration: vec3(&s.acceleration),
            })
            .collect(),
    )
}

struct Problems(Vec<String>);

impl Problems {
    fn check(&mut self, ok: bool, path: &str, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(format!("{path}: {}", msg()));
        }
    }

    fn positive(&mut self, v: f64, path: &str) {
        self.check(v.is_finite() && v > 0.0, path, || format!("must be positive and finite, got {v}"));
    }

    fn finite(&mut self, v: f64, path: &str) {
        self.check(v.is_finite(), path, || format!("must be finite, got {v}"));
    }

    fn finite3(&mut self, v: &Vec3, path: &str) {
        self.check(finite3(v), path, || format!("must be finite, got {v:?}"));
    }

    fn segments(&mut self, segs: &[SegmentSpec], path: &str) {
        for (i, s) in segs.iter().enumerate() {
            self.finite(s.start, &format!("{path}[{i}].start"));
            self.finite(s.end, &format!("{path}[{i}].end"));
            self.finite3(&s.acceleration, &format!("{path}[{i}].acceleration"));
        }
        if let Err(e) = profile(segs) {
            self.0.push(format!("{path}: {e}"));
        }
    }
}

impl Scenario {
    pub fn kind(&self) -> Option<ExperimentKind> {
        let present = self.kinds_present();
        (present.len() == 1).then(|| present[0])
    }

    fn kinds_present(&self) -> Vec<ExperimentKind> {
        let mut v = Vec::new();
        if self.interferometer.is_some() {
            v.push(ExperimentKind::Interferometer);
        }
        if self.clock_pair.is_some() {
            v.push(ExperimentKind::ClockPair);
        }
        if self.gravimeter.is_some() {
            v.push(ExperimentKind::Gravimeter);
        }
        if self.em_probe.is_some() {
            v.push(ExperimentKind::EmProbe);
        }
        v
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut p = Problems(Vec::new());
        p.check(!self.name.trim().is_empty(), "name", || "must not be empty".into());

        match &self.field {
            FieldSpec::Uniform { acceleration } => p.finite3(acceleration, "field.acceleration"),
            FieldSpec::LinearGradient {
                acceleration,
                gradient,
                reference,
            } => {
                p.finite3(acceleration, "field.acceleration");
                for (i, row) in gradient.iter().enumerate() {
                    p.finite3(row, &format!("field.gradient[{i}]"));
                }
                p.finite3(reference, "field.reference");
            }
            FieldSpec::PointMass { mu, center } => {
                p.positive(*mu, "field.mu");
                p.finite3(center, "field.center");
            }
        }

        let n = &self.numerics;
        p.positive(n.dt, "numerics.dt");
        p.positive(n.tol_closed_form, "numerics.tol_closed_form");
        p.positive(n.tol_integrated, "numerics.tol_integrated");

        let kinds = self.kinds_present();
        p.check(kinds.len() == 1, "experiment", || {
            if kinds.is_empty() {
                "one of [interferometer], [clock_pair], [gravimeter], [em_probe] is required".into()
            } else {
                let names: Vec<_> = kinds.iter().map(|k| k.name()).collect();
                format!("exactly one experiment kind allowed, found {}", names.join(", "))
            }
        });

        if let Some(i) = &self.interferometer {
            self.validate_interferometer(i, &mut p);
        }
        if let Some(c) = &self.clock_pair {
            p.finite3(&c.detector_position, "clock_pair.detector_position");
            p.finite3(&c.velocity, "clock_pair.velocity");
            p.finite3(&c.separation, "clock_pair.separation");
            p.positive(c.f0, "clock_pair.f0");
            p.finite(c.time, "clock_pair.time");
            p.segments(&c.ng, "clock_pair.ng");
            p.check(matches!(self.field, FieldSpec::Uniform { .. }), "field.model", || {
                "clock_pair requires a uniform field".into()
            });
        }
        if let Some(g) = &self.gravimeter {
            p.finite3(&g.position, "gravimeter.position");
            p.finite3(&g.velocity, "gravimeter.velocity");
            p.finite(g.time, "gravimeter.time");
            p.check(g.resolution.is_finite() && g.resolution >= 0.0, "gravimeter.resolution", || {
                format!("must be non-negative, got {}", g.resolution)
            });
            p.segments(&g.ng, "gravimeter.ng");
            if let Some(inf) = &g.inference {
                p.positive(inf.mu, "gravimeter.inference.mu");
                p.positive(inf.distance, "gravimeter.inference.distance");
                p.finite(inf.relative_position_error, "gravimeter.inference.relative_position_error");
            }
        }
        if let Some(e) = &self.em_probe {
            p.check(e.charge_to_mass.is_finite() && e.charge_to_mass != 0.0, "em_probe.charge_to_mass", || {
                format!("must be finite and non-zero, got {}", e.charge_to_mass)
            });
            p.finite3(&e.e, "em_probe.e");
            p.finite3(&e.b, "em_probe.b");
            p.finite3(&e.position, "em_probe.position");
            p.check(!e.velocities.is_empty(), "em_probe.velocities", || "must not be empty".into());
            for (i, v) in e.velocities.iter().enumerate() {
                p.finite3(v, &format!("em_probe.velocities[{i}]"));
            }
        }

        if let Some(s) = &self.sweep {
            for msg in s.problems() {
                p.0.push(format!("sweep.{msg}"));
            }
            let doc = toml::Value::try_from(self).map_err(|e| CliError::Parse(e.to_string()))?;
            match get_path(&doc, &s.parameter) {
                Ok(v) if v.is_float() || v.is_integer() => {}
                Ok(_) => p.0.push(format!("sweep.parameter: '{}' is not a numeric field", s.parameter)),
                Err(e) => p.0.push(format!("sweep.parameter: {e}")),
            }
        }

        if p.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(p.0))
        }
    }

    fn validate_interferometer(&self, i: &InterferometerSpec, p: &mut Problems) {
        p.positive(i.mass, "interferometer.mass");
        p.finite3(&i.position, "interferometer.position");
        p.finite3(&i.velocity, "interferometer.velocity");
        if i.pulses.is_empty() {
            match i.k {
                Some(k) => p.check(k.is_finite() && k != 0.0, "interferometer.k", || {
                    format!("must be finite and non-zero, got {k}")
                }),
                None => p.0.push("interferometer.k: required unless pulses are given".into()),
            }
            match i.t {
                Some(t) => p.positive(t, "interferometer.T"),
                None => p.0.push("interferometer.T: required unless pulses are given".into()),
            }
        } else {
            p.check(i.k.is_none() && i.t.is_none(), "interferometer", || {
                "give either k and T or an explicit pulse list, not both".into()
            });
            for (j, pulse) in i.pulses.iter().enumerate() {
                let path = format!("interferometer.pulses[{j}]");
                p.finite(pulse.time, &format!("{path}.time"));
                p.finite(pulse.k, &format!("{path}.k"));
                p.finite(pulse.kick_upper, &format!("{path}.kick_upper"));
                p.finite(pulse.kick_lower, &format!("{path}.kick_lower"));
            }
            p.check(
                i.pulses.windows(2).all(|w| w[0].time < w[1].time),
                "interferometer.pulses",
                || "pulse times must be strictly increasing".into(),
            );
            if let Some(first) = i.pulses.first() {
                p.check(first.time >= 0.0, "interferometer.pulses[0].time", || {
                    format!("must not precede the start at t = 0, got {}", first.time)
                });
            }
        }
        p.finite3(&i.mirror.position, "interferometer.mirror.position");
        p.finite3(&i.mirror.velocity, "interferometer.mirror.velocity");
        p.segments(&i.mirror.ng, "interferometer.mirror.ng");
    }

    /// Applies command-line overrides and re-validates.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(e) = o.engine {
            self.numerics.engine = e;
        }
        if let Some(dt) = o.dt {
            self.numerics.dt = dt;
        }
        if let Some(tol) = o.tol {
            self.numerics.tol_closed_form = tol;
            self.numerics.tol_integrated = tol;
        }
        self.validate()
    }

    /// Serialized form; parsing it back yields an equal scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn gravity_model(&self) -> GravityModel {
        match &self.field {
            FieldSpec::Uniform { acceleration } => GravityModel::uniform(vec3(acceleration)),
            FieldSpec::LinearGradient {
                acceleration,
                gradient,
                reference,
            } => {
                let g = Matrix3::from_fn(|r, c| gradient[r][c]);
                GravityModel::linear_gradient(vec3(acceleration), g, vec3(reference))
            }
            FieldSpec::PointMass { mu, center } => GravityModel::point_mass(*mu, vec3(center)),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            closed_form: self.numerics.tol_closed_form,
            integrated: self.numerics.tol_integrated,
        }
    }

    pub fn interferometer_scenario(&self) -> Result<InterferometerScenario, CliError> {
        let i = self
            .interferometer
            .as_ref()
            .ok_or_else(|| CliError::Invalid(vec!["interferometer: section missing".into()]))?;
        let invalid = |path: &str, e: ugfsim::Error| CliError::Invalid(vec![format!("{path}: {e}")]);
        let sequence = if i.pulses.is_empty() {
            let convention = match i.kick_convention {
                KickChoice::Symmetric => KickConvention::Symmetric,
                KickChoice::Asymmetric => KickConvention::Asymmetric,
            };
            build_mach_zehnder_with(i.k.unwrap_or_default(), i.t.unwrap_or_default(), convention)
                .map_err(|e| invalid("interferometer", e))?
        } else {
            PulseSequence::new(
                i.pulses
                    .iter()
                    .map(|p| Pulse {
                        time: p.time,
                        wavevector: p.k,
                        coefficient: p.coefficient,
                        kick_upper: p.kick_upper,
                        kick_lower: p.kick_lower,
                    })
                    .collect(),
            )
            .map_err(|e| invalid("interferometer.pulses", e))?
        };
        let atom = AtomSpec::new(i.mass, ParticleState::new(vec3(&i.position), vec3(&i.velocity), 0.0))
            .map_err(|e| invalid("interferometer.mass", e))?;
        let mirror = MirrorSpec {
            initial: ParticleState::new(vec3(&i.mirror.position), vec3(&i.mirror.velocity), 0.0),
            ng: profile(&i.mirror.ng).map_err(|e| invalid("interferometer.mirror.ng", e))?,
        };
        Ok(InterferometerScenario {
            sequence,
            atom,
            mirror,
            field: self.gravity_model(),
            propagation: PropagationOptions {
                dt: self.numerics.dt,
                force_numerical: self.numerics.force_numerical,
            },
            separation_phase: self.numerics.separation_phase,
        })
    }

    pub fn clock_pair_scenario(&self) -> Result<ClockPairScenario, CliError> {
        let c = self
            .clock_pair
            .as_ref()
            .ok_or_else(|| CliError::Invalid(vec!["clock_pair: section missing".into()]))?;
        let a_g = self
            .gravity_model()
            .uniform_acceleration()
            .ok_or_else(|| CliError::Invalid(vec!["field.model: clock_pair requires a uniform field".into()]))?;
        Ok(ClockPairScenario {
            detector: ParticleState::new(vec3(&c.detector_position), vec3(&c.velocity), c.time),
            separation: vec3(&c.separation),
            ng: profile(&c.ng).map_err(|e| CliError::Invalid(vec![format!("clock_pair.ng: {e}")]))?,
            metric: MetricUgf::new(a_g),
            f0: c.f0,
        })
    }

    pub fn spring_balance(&self) -> Result<SpringBalance, CliError> {
        let g = self
            .gravimeter
            .as_ref()
            .ok_or_else(|| CliError::Invalid(vec!["gravimeter: section missing".into()]))?;
        Ok(SpringBalance {
            state: ParticleState::new(vec3(&g.position), vec3(&g.velocity), g.time),
            ng: profile(&g.ng).map_err(|e| CliError::Invalid(vec![format!("gravimeter.ng: {e}")]))?,
            resolution: g.resolution,
        })
    }

    pub fn em_field(&self) -> Option<EmField> {
        self.em_probe.as_ref().map(|e| EmField {
            e: vec3(&e.e),
            b: vec3(&e.b),
        })
    }
}
