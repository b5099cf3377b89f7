//! The control log and its CSV form.
//!
//! ```text
//! # scenario: {"name":"E1","duration":60.0,...}
//! # start_pose: 0,0,0
//! t_s,volts,decision,laser_on,x_cm,y_cm,theta_deg
//! 3,0.0124,L,0,1.198355...,0.062803...,3
//! ```
//!
//! Each row is a control tick: the sample read, the decision taken and the
//! pose after moving. Volts carry four decimals; other numbers use the
//! shortest text that parses back to the same value.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::Scenario;
use crate::controller::{self, ControlConfig, SteerDecision, TickOutcome};
use crate::marble::PotentialSample;
use crate::robot::{self, MotionConfig, Pose};

pub const HEADER: &str = "t_s,volts,decision,laser_on,x_cm,y_cm,theta_deg";
pub const RAW_HEADER: &str = "t_s,volts,laser_on";
const SCENARIO_KEY: &str = "# scenario: ";
const START_KEY: &str = "# start_pose: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub scenario: Scenario,
    pub samples: Vec<PotentialSample>,
    pub decisions: Vec<SteerDecision>,
    /// Starting pose followed by the pose after each decision.
    pub poses: Vec<Pose>,
    /// Every 10 ms sample, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<PotentialSample>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecisionTally {
    pub left: usize,
    pub right: usize,
    pub stay: usize,
}

impl DecisionTally {
    pub fn moving(&self) -> usize {
        self.left + self.right
    }

    /// Share of moving decisions that were Left.
    pub fn left_fraction(&self) -> Option<f64> {
        (self.moving() > 0).then(|| self.left as f64 / self.moving() as f64)
    }
}

impl ExperimentTrace {
    pub fn new(scenario: Scenario, start: Pose) -> Self {
        Self {
            scenario,
            samples: Vec::new(),
            decisions: Vec::new(),
            poses: vec![start],
            raw: None,
        }
    }

    pub fn push(&mut self, outcome: TickOutcome) {
        self.samples.push(outcome.sample);
        self.decisions.push(outcome.decision);
        self.poses.push(outcome.pose);
    }

    pub fn start_pose(&self) -> Pose {
        self.poses[0]
    }

    pub fn tally(&self) -> DecisionTally {
        let mut t = DecisionTally::default();
        for d in &self.decisions {
            match d {
                SteerDecision::Left => t.left += 1,
                SteerDecision::Right => t.right += 1,
                SteerDecision::Stay => t.stay += 1,
            }
        }
        t
    }

    pub fn volts(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.volts).collect()
    }

    /// Checks every decision against its sample and every pose against its
    /// predecessor; reports the first mismatch.
    pub fn verify(&self, control: &ControlConfig, motion: &MotionConfig) -> Result<(), String> {
        if self.samples.len() != self.decisions.len() || self.poses.len() != self.decisions.len() + 1 {
            return Err("samples, decisions and poses differ in length".into());
        }
        for (i, (s, d)) in self.samples.iter().zip(&self.decisions).enumerate() {
            let expected = controller::decide(s.volts, control).map_err(|e| format!("row {i}: {e}"))?;
            if expected != *d {
                return Err(format!("row {i}: decision {d} but sample gives {expected}"));
            }
            let pose = robot::apply(&self.poses[i], *d, motion);
            if pose != self.poses[i + 1] {
                return Err(format!("row {i}: pose does not follow from its predecessor"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> TraceError {
    TraceError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn push_pose(out: &mut String, p: &Pose) {
    let _ = write!(out, "{},{},{}", p.x, p.y, p.theta);
}

/// CSV text of a trace. The raw stream is not part of it.
pub fn trace_to_string(trace: &ExperimentTrace) -> String {
    let mut out = String::new();
    out.push_str(SCENARIO_KEY);
    out.push_str(&serde_json::to_string(&trace.scenario).expect("scenario serializes"));
    out.push('\n');
    out.push_str(START_KEY);
    push_pose(&mut out, &trace.start_pose());
    out.push('\n');
    out.push_str(HEADER);
    out.push('\n');
    for ((s, d), p) in trace.samples.iter().zip(&trace.decisions).zip(&trace.poses[1..]) {
        let _ = write!(out, "{},{:.4},{},{},", s.t, s.volts, d, u8::from(s.laser_on));
        push_pose(&mut out, p);
        out.push('\n');
    }
    out
}

pub fn write_trace<W: Write>(trace: &ExperimentTrace, mut dest: W) -> io::Result<()> {
    dest.write_all(trace_to_string(trace).as_bytes())?;
    dest.flush()
}

pub fn write_trace_file(trace: &ExperimentTrace, path: &Path) -> io::Result<()> {
    std::fs::write(path, trace_to_string(trace))
}

/// The 10 ms stream as `t_s,volts,laser_on` rows.
pub fn write_raw<W: Write>(samples: &[PotentialSample], mut dest: W) -> io::Result<()> {
    let mut out = String::with_capacity(samples.len() * 16);
    out.push_str(RAW_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(out, "{},{:.4},{}", s.t, s.volts, u8::from(s.laser_on));
    }
    dest.write_all(out.as_bytes())?;
    dest.flush()
}

/// Splits a row into fields with their 1-based starting columns.
fn fields(row: &str) -> Vec<(usize, &str)> {
    let mut col = 1;
    row.split(',')
        .map(|f| {
            let start = col;
            col += f.chars().count() + 1;
            (start, f)
        })
        .collect()
}

fn number(line: usize, (col, text): (usize, &str), what: &str) -> Result<f64, TraceError> {
    let v: f64 = text
        .parse()
        .map_err(|_| parse_err(line, col, format!("{what}: {text:?} is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, col, format!("{what} is not finite")));
    }
    Ok(v)
}

fn pose_fields(line: usize, f: &[(usize, &str)]) -> Result<Pose, TraceError> {
    let p = Pose {
        x: number(line, f[0], "x_cm")?,
        y: number(line, f[1], "y_cm")?,
        theta: number(line, f[2], "theta_deg")?,
    };
    if !p.is_valid() {
        return Err(parse_err(line, f[2].0, "heading outside (-180, 180]"));
    }
    Ok(p)
}

pub fn read_trace<R: BufRead>(source: R) -> Result<ExperimentTrace, TraceError> {
    let mut scenario: Option<Scenario> = None;
    let mut start: Option<Pose> = None;
    let mut header_seen = false;
    let mut trace: Option<ExperimentTrace> = None;
    let mut last_t = f64::NEG_INFINITY;
    let mut startup_delay = ControlConfig::default().startup_delay;

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if !header_seen {
            if let Some(json) = line.strip_prefix(SCENARIO_KEY) {
                let s: Scenario = serde_json::from_str(json)
                    .map_err(|e| parse_err(line_no, SCENARIO_KEY.len() + e.column(), format!("scenario: {e}")))?;
                startup_delay = s.control().startup_delay;
                scenario = Some(s);
            } else if let Some(rest) = line.strip_prefix(START_KEY) {
                let f: Vec<(usize, &str)> = fields(rest)
                    .into_iter()
                    .map(|(c, t)| (c + START_KEY.len(), t))
                    .collect();
                if f.len() != 3 {
                    return Err(parse_err(line_no, START_KEY.len() + 1, "start pose needs x,y,theta"));
                }
                start = Some(pose_fields(line_no, &f)?);
            } else if line.starts_with('#') {
                continue;
            } else if line == HEADER {
                header_seen = true;
                let s = scenario
                    .take()
                    .ok_or_else(|| parse_err(line_no, 1, "missing scenario metadata before header"))?;
                let p = start
                    .take()
                    .ok_or_else(|| parse_err(line_no, 1, "missing start pose before header"))?;
                trace = Some(ExperimentTrace::new(s, p));
            } else {
                return Err(parse_err(line_no, 1, format!("expected header {HEADER:?}")));
            }
            continue;
        }

        let trace = trace.as_mut().expect("set with header");
        let f = fields(&line);
        if f.len() != 7 {
            return Err(parse_err(line_no, 1, format!("expected 7 fields, found {}", f.len())));
        }
        let t = number(line_no, f[0], "t_s")?;
        if t <= last_t {
            return Err(parse_err(line_no, f[0].0, format!("timestamp {t} does not increase")));
        }
        if t + 1e-9 < startup_delay {
            return Err(parse_err(
                line_no,
                f[0].0,
                format!("timestamp {t} precedes the start-up delay"),
            ));
        }
        last_t = t;
        let volts = number(line_no, f[1], "volts")?;
        let decision: SteerDecision = f[2].1.parse().map_err(|e: String| parse_err(line_no, f[2].0, e))?;
        let laser_on = match f[3].1 {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    line_no,
                    f[3].0,
                    format!("laser_on must be 0 or 1, got {other:?}"),
                ))
            }
        };
        let pose = pose_fields(line_no, &f[4..7])?;
        trace.push(TickOutcome {
            sample: PotentialSample { t, volts, laser_on },
            decision,
            pose,
        });
    }
    trace.ok_or_else(|| parse_err(1, 1, "no header found"))
}

pub fn read_trace_file(path: &Path) -> Result<ExperimentTrace, TraceError> {
    let file = std::fs::File::open(path)?;
    read_trace(io::BufReader::new(file))
}
