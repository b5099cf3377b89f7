//! Wire messages. Every message is one JSON object with a `kind` field.
//!
//! Client to server: [`SessionCommand`]. Server to client: [`TelemetryEvent`]
//! broadcast to every subscriber, and a [`Reply`] to the issuing client for
//! each command.

use marblebot_core::{ExperimentTrace, LaserStimulus, Pose, PotentialSample, SteerDecision, StimulusMode};
use serde::{Deserialize, Serialize};

fn default_duration() -> f64 {
    LaserStimulus::DEFAULT_DURATION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionCommand {
    FireLaser {
        #[serde(default = "default_duration")]
        duration_s: f64,
        amplitude: f64,
        mode: StimulusMode,
    },
    Pause,
    Resume,
    Reset,
    SetSpeed {
        #[serde(alias = "realtime_factor")]
        factor: f64,
    },
}

impl SessionCommand {
    pub fn name(&self) -> &'static str {
        match self {
            SessionCommand::FireLaser { .. } => "fire_laser",
            SessionCommand::Pause => "pause",
            SessionCommand::Resume => "resume",
            SessionCommand::Reset => "reset",
            SessionCommand::SetSpeed { .. } => "set_speed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Running,
    Paused,
    /// The scenario duration has elapsed.
    Finished,
    /// The clock restarted from `t = 0`.
    Reset,
    /// The simulation stopped on an integration error.
    Failed,
    /// Sent to a subscriber that fell too far behind, just before it is
    /// disconnected.
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TelemetryEvent {
    /// One 10 ms reading.
    Sample { t: f64, volts: f64, laser_on: bool },
    /// A control tick: the reading used and the decision taken.
    Decision {
        t: f64,
        volts: f64,
        decision: SteerDecision,
    },
    /// Robot pose after a control tick.
    Pose {
        t: f64,
        x_cm: f64,
        y_cm: f64,
        theta_deg: f64,
    },
    /// A laser pulse starting at `t`.
    Stimulus {
        t: f64,
        duration_s: f64,
        amplitude: f64,
        mode: StimulusMode,
    },
    Status {
        t: f64,
        state: SessionState,
        speed: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
}

impl TelemetryEvent {
    pub fn t(&self) -> f64 {
        match self {
            TelemetryEvent::Sample { t, .. }
            | TelemetryEvent::Decision { t, .. }
            | TelemetryEvent::Pose { t, .. }
            | TelemetryEvent::Stimulus { t, .. }
            | TelemetryEvent::Status { t, .. } => *t,
        }
    }

    pub fn sample(s: &PotentialSample) -> Self {
        TelemetryEvent::Sample {
            t: s.t,
            volts: s.volts,
            laser_on: s.laser_on,
        }
    }

    pub fn decision(s: &PotentialSample, decision: SteerDecision) -> Self {
        TelemetryEvent::Decision {
            t: s.t,
            volts: s.volts,
            decision,
        }
    }

    pub fn pose(t: f64, p: &Pose) -> Self {
        TelemetryEvent::Pose {
            t,
            x_cm: p.x,
            y_cm: p.y,
            theta_deg: p.theta,
        }
    }

    pub fn stimulus(s: &LaserStimulus) -> Self {
        TelemetryEvent::Stimulus {
            t: s.t_on,
            duration_s: s.duration,
            amplitude: s.amplitude,
            mode: s.mode,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reply {
    /// Accepted; takes effect at the tick boundary `apply_at`.
    Ack { command: String, apply_at: f64 },
    Rejected {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        command: Option<String>,
        reason: String,
    },
}

impl Reply {
    pub fn rejected(command: Option<&str>, reason: impl Into<String>) -> Self {
        Reply::Rejected {
            command: command.map(str::to_owned),
            reason: reason.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reply serializes")
    }
}

/// The event stream a session with no operator commands emits for the run
/// recorded in `trace`, without status events. `trace` must carry its raw
/// samples.
pub fn events_from_trace(trace: &ExperimentTrace) -> Option<Vec<TelemetryEvent>> {
    let raw = trace.raw.as_ref()?;
    let mut stimuli = trace.scenario.stimuli.clone();
    stimuli.sort_by(|a, b| a.t_on.total_cmp(&b.t_on));
    let mut stimuli = stimuli.iter().peekable();
    let mut control = trace
        .samples
        .iter()
        .zip(&trace.decisions)
        .zip(&trace.poses[1..])
        .peekable();
    let mut events = Vec::with_capacity(raw.len() + 2 * trace.samples.len());
    for (i, s) in raw.iter().enumerate() {
        events.push(TelemetryEvent::sample(s));
        if let Some(((c, d), p)) = control.next_if(|((c, _), _)| c.t == s.t) {
            events.push(TelemetryEvent::decision(c, *d));
            events.push(TelemetryEvent::pose(c.t, p));
        }
        let next_t = raw.get(i + 1).map_or(f64::INFINITY, |n| n.t);
        while let Some(st) = stimuli.next_if(|st| st.t_on < next_t) {
            events.push(TelemetryEvent::stimulus(st));
        }
    }
    Some(events)
}

/// Parses one command line; the error text is suitable for a rejection.
pub fn parse_command(line: &str) -> Result<SessionCommand, String> {
    serde_json::from_str(line).map_err(|e| format!("malformed command: {e}"))
}
