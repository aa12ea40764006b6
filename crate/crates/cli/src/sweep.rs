//! Parameter sweeps.
//!
//! A sweep edits one numeric entry of the scenario document, addressed by a
//! path such as `interferometer.mirror.ng[0].acceleration[2]`, and runs the
//! scenario once per value. Rows run in parallel and are emitted in sweep
//! order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::CliError;
use crate::report::{csv_cells, csv_header, fmt_f64, run};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
}

/// Upper bound on the number of rows in one sweep.
pub const MAX_ROWS: usize = 100_000;

impl SweepSpec {
    pub(crate) fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !self.start.is_finite() {
            p.push(format!("start: must be finite, got {}", self.start));
        }
        if !self.stop.is_finite() {
            p.push(format!("stop: must be finite, got {}", self.stop));
        }
        match (self.step, self.count) {
            (Some(_), Some(_)) => p.push("step: give either step or count, not both".into()),
            (None, None) => p.push("step: one of step or count is required".into()),
            (Some(step), None) => {
                if self.scale == Scale::Log {
                    p.push("step: logarithmic sweeps take count".into());
                } else if !(step.is_finite() && step > 0.0) {
                    p.push(format!("step: must be positive, got {step}"));
                } else if ((self.stop - self.start).abs() / step).round() as usize > MAX_ROWS {
                    p.push(format!("step: more than {MAX_ROWS} rows"));
                }
            }
            (None, Some(n)) => {
                if n == 0 || n > MAX_ROWS {
                    p.push(format!("count: must be between 1 and {MAX_ROWS}, got {n}"));
                }
            }
        }
        if self.scale == Scale::Log && !(self.start > 0.0 && self.stop > 0.0) {
            p.push("scale: logarithmic sweeps need positive start and stop".into());
        }
        p
    }

    /// Sweep values; the endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let intervals = match (self.step, self.count) {
            (Some(step), _) => ((self.stop - self.start).abs() / step).round() as usize,
            (None, Some(n)) => n.saturating_sub(1),
            (None, None) => 0,
        };
        if intervals == 0 {
            return vec![self.start];
        }
        (0..=intervals)
            .map(|i| {
                if i == intervals {
                    return self.stop;
                }
                let f = i as f64 / intervals as f64;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * f,
                    Scale::Log => self.start * (self.stop / self.start).powf(f),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Segment>, String> {
    let mut out = Vec::new();
    for part in path.split('.') {
        let (key, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if key.is_empty() {
            return Err(format!("malformed path '{path}'"));
        }
        out.push(Segment::Key(key.to_string()));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(|| format!("malformed path '{path}'"))?;
            if !rest.starts_with('[') {
                return Err(format!("malformed path '{path}'"));
            }
            let idx = rest[1..close]
                .parse::<usize>()
                .map_err(|_| format!("bad index in path '{path}'"))?;
            out.push(Segment::Index(idx));
            rest = &rest[close + 1..];
        }
    }
    Ok(out)
}

fn step<'a>(v: &'a Value, seg: &Segment, path: &str) -> Result<&'a Value, String> {
    match seg {
        Segment::Key(k) => v.get(k.as_str()),
        Segment::Index(i) => v.get(*i),
    }
    .ok_or_else(|| format!("'{path}' does not exist in the scenario"))
}

pub fn get_path<'a>(doc: &'a Value, path: &str) -> Result<&'a Value, String> {
    let segs = parse_path(path)?;
    segs.iter().try_fold(doc, |v, s| step(v, s, path))
}

pub fn set_path(doc: &mut Value, path: &str, value: f64) -> Result<(), String> {
    let segs = parse_path(path)?;
    let mut v = doc;
    for seg in &segs {
        let next = match seg {
            Segment::Key(k) => v.get_mut(k.as_str()),
            Segment::Index(i) => v.get_mut(*i),
        };
        v = next.ok_or_else(|| format!("'{path}' does not exist in the scenario"))?;
    }
    match v {
        Value::Float(f) => *f = value,
        Value::Integer(i) => {
            if value.fract() != 0.0 || value.abs() > i64::MAX as f64 {
                return Err(format!("'{path}' is an integer field; {value} is not an integer"));
            }
            *i = value as i64;
        }
        _ => return Err(format!("'{path}' is not a numeric field")),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub cells: Vec<String>,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: String,
    pub header: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed && r.error.is_none())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(&row.cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn row_for(base: &Value, spec: &SweepSpec, value: f64, width: usize) -> SweepRow {
    let failed = |msg: String| {
        let mut cells = vec![fmt_f64(value)];
        cells.extend(std::iter::repeat_n(String::new(), width - 3));
        cells.push("false".into());
        cells.push(msg.clone());
        SweepRow {
            value,
            cells,
            passed: false,
            error: Some(msg),
        }
    };
    let mut doc = base.clone();
    if let Err(e) = set_path(&mut doc, &spec.parameter, value) {
        return failed(e);
    }
    let scenario: Scenario = match doc.try_into() {
        Ok(s) => s,
        Err(e) => return failed(format!("parse error: {e}")),
    };
    if let Err(e) = scenario.validate() {
        return failed(e.to_string().replace('\n', " "));
    }
    match run(&scenario) {
        Ok(report) => {
            let mut cells = vec![fmt_f64(value)];
            cells.extend(csv_cells(&report));
            SweepRow {
                value,
                cells,
                passed: report.passed,
                error: None,
            }
        }
        Err(e) => failed(e.to_string()),
    }
}

/// Runs the scenario's sweep. Per-row failures are recorded in the table.
pub fn sweep(scenario: &Scenario) -> Result<SweepTable, CliError> {
    let spec = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Invalid(vec!["sweep: scenario has no [sweep] table".into()]))?;
    scenario.validate()?;
    let kind = scenario.kind().expect("validated scenario");
    let base = Value::try_from(scenario).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut header = vec![spec.parameter.clone()];
    header.extend(csv_header(kind).into_iter().map(String::from));
    let width = header.len();
    let rows = spec
        .values()
        .into_par_iter()
        .map(|v| row_for(&base, spec, v, width))
        .collect();
    Ok(SweepTable {
        parameter: spec.parameter.clone(),
        header,
        rows,
    })
}
