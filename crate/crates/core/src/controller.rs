//! Sign-of-potential steering with a symmetric dead-band.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marble::{Marble, PotentialSample};
use crate::robot::{self, MotionConfig, Pose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("potential {0} is not finite")]
    NonFinite(f64),
    #[error("control tick at t = {t} s precedes the start-up delay of {startup_delay} s")]
    BeforeStartup { t: f64, startup_delay: f64 },
    #[error("invalid control config: {0}")]
    InvalidConfig(String),
}

/// Serialized as its log code, `L`, `R` or `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SteerDecision {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
    #[serde(rename = "S")]
    Stay,
}

impl SteerDecision {
    /// Single-letter log code.
    pub fn code(self) -> char {
        match self {
            SteerDecision::Left => 'L',
            SteerDecision::Right => 'R',
            SteerDecision::Stay => 'S',
        }
    }

    pub fn is_moving(self) -> bool {
        self != SteerDecision::Stay
    }
}

impl fmt::Display for SteerDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for SteerDecision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" => Ok(SteerDecision::Left),
            "R" => Ok(SteerDecision::Right),
            "S" => Ok(SteerDecision::Stay),
            other => Err(format!("unknown decision code {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Half-width of the no-move band, volts.
    pub dead_band: f64,
    /// Seconds between decisions.
    pub decision_period: f64,
    /// Seconds after activation before the first decision.
    pub startup_delay: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            dead_band: 1e-3,
            decision_period: 2.0,
            startup_delay: 3.0,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let all_positive = [self.dead_band, self.decision_period, self.startup_delay]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if all_positive {
            Ok(())
        } else {
            Err(ControlError::InvalidConfig(format!(
                "all fields must be finite and > 0: {self:?}"
            )))
        }
    }
}

/// Left above `+dead_band`, Right below `-dead_band`, Stay otherwise. The
/// band edges themselves are Stay.
pub fn decide(volts: f64, config: &ControlConfig) -> Result<SteerDecision, ControlError> {
    if !volts.is_finite() {
        return Err(ControlError::NonFinite(volts));
    }
    Ok(if volts > config.dead_band {
        SteerDecision::Left
    } else if volts < -config.dead_band {
        SteerDecision::Right
    } else {
        SteerDecision::Stay
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickOutcome {
    pub sample: PotentialSample,
    pub decision: SteerDecision,
    pub pose: Pose,
}

/// One control cycle at the marble's current instant: read the latest
/// quantized sample, decide, move.
pub fn control_tick(
    marble: &Marble,
    pose: &Pose,
    config: &ControlConfig,
    motion: &MotionConfig,
) -> Result<TickOutcome, ControlError> {
    let sample = marble.last_sample();
    // Tick instants sit on the 10 ms grid; allow for its rounding.
    if sample.t + 1e-9 < config.startup_delay {
        return Err(ControlError::BeforeStartup {
            t: sample.t,
            startup_delay: config.startup_delay,
        });
    }
    let decision = decide(sample.volts, config)?;
    Ok(TickOutcome {
        sample,
        decision,
        pose: robot::apply(pose, decision, motion),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SteerDecision::*;

    fn cfg() -> ControlConfig {
        ControlConfig::default()
    }

    #[test]
    fn truth_table() {
        assert_eq!(decide(0.005, &cfg()).unwrap(), Left);
        assert_eq!(decide(-0.020, &cfg()).unwrap(), Right);
        assert_eq!(decide(0.0005, &cfg()).unwrap(), Stay);
        assert_eq!(decide(0.001, &cfg()).unwrap(), Stay);
        assert_eq!(decide(-0.001, &cfg()).unwrap(), Stay);
    }

    #[test]
    fn non_finite_is_an_error_not_stay() {
        assert!(decide(f64::NAN, &cfg()).is_err());
        assert!(decide(f64::NEG_INFINITY, &cfg()).is_err());
    }

    #[test]
    fn codes_round_trip() {
        for d in [Left, Right, Stay] {
            assert_eq!(d.code().to_string().parse::<SteerDecision>().unwrap(), d);
        }
        assert!("X".parse::<SteerDecision>().is_err());
    }

    #[test]
    fn config_must_be_positive() {
        assert!(ControlConfig {
            dead_band: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(ControlConfig {
            decision_period: -2.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(cfg().validate().is_ok());
    }

    proptest! {
        #[test]
        fn decide_is_odd(v in -0.1..0.1f64) {
            let a = decide(v, &cfg()).unwrap();
            let b = decide(-v, &cfg()).unwrap();
            prop_assert_eq!(a == Left, b == Right);
            prop_assert_eq!(a == Stay, b == Stay);
        }

        #[test]
        fn decide_is_scale_invariant(v in -0.1..0.1f64, k in 1e-3..1e3f64) {
            let scaled = ControlConfig { dead_band: cfg().dead_band * k, ..cfg() };
            prop_assert_eq!(decide(v, &cfg()).unwrap(), decide(v * k, &scaled).unwrap());
        }
    }
}
