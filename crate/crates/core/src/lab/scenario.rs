use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{ControlConfig, ControlError};
use crate::marble::{self, ElectrodeCalibration, LaserStimulus, MarbleError};
use crate::oregonator::{self, LimitCycleSummary, OscillatorError, OscillatorParams, OscillatorState};
use crate::robot::{MotionConfig, Pose};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Marble(#[from] MarbleError),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario file: {0}")]
    Format(String),
}

/// Optional replacements for any default parameter. Absent fields keep the
/// default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_scale: Option<f64>,
    /// Peak-to-peak potential targeted by calibration, volts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adc_step: Option<f64>,
    /// Constant offset added to the calibrated potential, volts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invert_polarity: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dead_band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub startup_delay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_angle: Option<f64>,
    /// Starting phase on the limit cycle as a fraction of a period after a
    /// maximum of `v`. Drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_pose: Option<Pose>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Seconds of simulation time.
    pub duration: f64,
    #[serde(default)]
    pub stimuli: Vec<LaserStimulus>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
}

/// Everything a run needs, resolved from a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub params: OscillatorParams,
    pub calibration: ElectrodeCalibration,
    pub control: ControlConfig,
    pub motion: MotionConfig,
    pub start_pose: Pose,
    pub initial_state: OscillatorState,
    pub initial_phase: f64,
    pub cycle: LimitCycleSummary,
}

/// Noise and initial phase come from distinct streams of the seed.
const NOISE_STREAM: u64 = 0;
const PHASE_STREAM: u64 = 1;

pub(crate) fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn noise_rng(seed: u64) -> ChaCha8Rng {
    seeded_stream(seed, NOISE_STREAM)
}

fn on_grid(seconds: f64) -> bool {
    let ticks = seconds * marble::SAMPLES_PER_SECOND as f64;
    (ticks - ticks.round()).abs() < 1e-6
}

impl Scenario {
    pub fn new(name: impl Into<String>, duration: f64, seed: u64) -> Self {
        Self {
            name: name.into(),
            duration,
            stimuli: Vec::new(),
            seed,
            overrides: Overrides::default(),
        }
    }

    pub fn with_stimulus(mut self, stimulus: LaserStimulus) -> Self {
        self.stimuli.push(stimulus);
        self
    }

    pub fn with_overrides(mut self, overrides: Overrides) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Loads `.json` files as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty() || self.name.chars().any(char::is_control) {
            return Err(ScenarioError::Invalid(format!("bad name {:?}", self.name)));
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(ScenarioError::Invalid(format!(
                "duration {} must be > 0",
                self.duration
            )));
        }
        for s in &self.stimuli {
            s.validate()?;
            if s.t_on > self.duration {
                return Err(ScenarioError::Invalid(format!(
                    "stimulus at {} s lies outside [0, {}]",
                    s.t_on, self.duration
                )));
            }
        }
        if let Some(p) = self.overrides.initial_phase {
            if !p.is_finite() {
                return Err(ScenarioError::Invalid("initial_phase must be finite".into()));
            }
        }
        if let Some(b) = self.overrides.bias_v {
            if !b.is_finite() {
                return Err(ScenarioError::Invalid("bias_v must be finite".into()));
            }
        }
        let control = self.control();
        control.validate()?;
        for (name, v) in [
            ("decision_period", control.decision_period),
            ("startup_delay", control.startup_delay),
        ] {
            if !on_grid(v) {
                return Err(ScenarioError::Invalid(format!("{name} {v} is not a multiple of 10 ms")));
            }
        }
        if !self.motion().is_valid() {
            return Err(ScenarioError::Invalid(format!(
                "invalid motion config {:?}",
                self.motion()
            )));
        }
        if let Some(pose) = self.overrides.start_pose {
            if !pose.is_valid() {
                return Err(ScenarioError::Invalid(format!("invalid start pose {pose:?}")));
            }
        }
        self.params().validate()?;
        Ok(())
    }

    pub fn params(&self) -> OscillatorParams {
        let o = &self.overrides;
        let d = OscillatorParams::default();
        OscillatorParams {
            epsilon: o.epsilon.unwrap_or(d.epsilon),
            f: o.f.unwrap_or(d.f),
            q: o.q.unwrap_or(d.q),
            phi0: o.phi0.unwrap_or(d.phi0),
            t_scale: o.t_scale.unwrap_or(d.t_scale),
        }
    }

    pub fn control(&self) -> ControlConfig {
        let o = &self.overrides;
        let d = ControlConfig::default();
        ControlConfig {
            dead_band: o.dead_band.unwrap_or(d.dead_band),
            decision_period: o.decision_period.unwrap_or(d.decision_period),
            startup_delay: o.startup_delay.unwrap_or(d.startup_delay),
        }
    }

    pub fn motion(&self) -> MotionConfig {
        let o = &self.overrides;
        let d = MotionConfig::default();
        MotionConfig {
            step_length: o.step_length.unwrap_or(d.step_length),
            turn_angle: o.turn_angle.unwrap_or(d.turn_angle),
        }
    }

    pub fn start_pose(&self) -> Pose {
        self.overrides.start_pose.unwrap_or_default()
    }

    /// Calibrates the electrodes and places the oscillator on its cycle.
    pub fn setup(&self) -> Result<Setup, ScenarioError> {
        self.validate()?;
        let o = &self.overrides;
        let params = self.params();
        let cycle = oregonator::find_limit_cycle(&params, params.phi0)?;
        let mut calibration = marble::calibrate_from_cycle(&cycle, o.target_amp.unwrap_or(marble::DEFAULT_TARGET_AMP))?;
        if let Some(noise) = o.noise_std {
            calibration.noise_std = noise;
        }
        if let Some(step) = o.adc_step {
            calibration.adc_step = step;
        }
        if o.invert_polarity.unwrap_or(false) {
            calibration = calibration.inverted();
        }
        if let Some(bias) = o.bias_v {
            calibration = calibration.with_bias(bias);
        }
        calibration.validate()?;

        let initial_phase = match o.initial_phase {
            Some(p) => p.rem_euclid(1.0),
            None => seeded_stream(self.seed, PHASE_STREAM).random::<f64>(),
        };
        let initial_state = oregonator::state_at_phase(&params, &cycle, initial_phase)?;
        Ok(Setup {
            params,
            calibration,
            control: self.control(),
            motion: self.motion(),
            start_pose: self.start_pose(),
            initial_state,
            initial_phase,
            cycle,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let text = r#"
name = "custom"
duration = 30.0
seed = 5

[[stimuli]]
t_on = 10.0
duration = 10.0
amplitude = 0.2
mode = "inhibit"

[overrides]
bias_v = 0.002
invert_polarity = true
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        assert_eq!(s.stimuli.len(), 1);
        assert_eq!(s.overrides.bias_v, Some(0.002));
        assert_eq!(Scenario::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Scenario::from_toml_str("name = \"x\"\nduration = 1.0\nspeed = 3\n").is_err());
    }

    #[test]
    fn validation() {
        assert!(Scenario::new("x", 0.0, 1).validate().is_err());
        let late = Scenario::new("x", 10.0, 1).with_stimulus(LaserStimulus::inhibit(11.0, 1.0, 0.1).unwrap());
        assert!(late.validate().is_err());
        let off_grid = Scenario::new("x", 10.0, 1).with_overrides(Overrides {
            decision_period: Some(1.005),
            ..Overrides::default()
        });
        assert!(off_grid.validate().is_err());
        assert!(Scenario::new("x", 10.0, 1).validate().is_ok());
    }

    #[test]
    fn phase_depends_on_seed() {
        let a = Scenario::new("x", 10.0, 1).setup().unwrap();
        let b = Scenario::new("x", 10.0, 2).setup().unwrap();
        assert_ne!(a.initial_phase, b.initial_phase);
        assert!(a.initial_state.validate().is_ok());
    }
}
