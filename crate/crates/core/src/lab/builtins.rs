//! Scenarios E1–E4: tuned reconstructions of four steering regimes.
//!
//! * E1: no stimulation; the decision split is centred by a small bias.
//! * E2: a suppressing pulse at 10 s with inverted electrode polarity, an
//!   excitation at 32 s and two sub-threshold pulses later on.
//! * E3: excitation every few seconds on a positively biased electrode; the
//!   robot only turns left.
//! * E4: negatively biased electrode, then an excitation train that lifts
//!   the potential above zero.

use super::scenario::{Overrides, Scenario};
use crate::marble::{LaserStimulus, StimulusMode};

fn stim(t_on: f64, duration: f64, amplitude: f64, mode: StimulusMode) -> LaserStimulus {
    LaserStimulus {
        t_on,
        duration,
        amplitude,
        mode,
    }
}

fn e1() -> Scenario {
    Scenario::new("E1", 60.0, 1).with_overrides(Overrides {
        bias_v: Some(0.005),
        ..Overrides::default()
    })
}

fn e2() -> Scenario {
    let mut s = Scenario::new("E2", 70.0, 7).with_overrides(Overrides {
        invert_polarity: Some(true),
        ..Overrides::default()
    });
    s.stimuli = vec![
        stim(10.0, 10.0, 0.2, StimulusMode::Inhibit),
        stim(32.0, 10.0, 0.2, StimulusMode::Excite),
        stim(44.0, 10.0, 0.002, StimulusMode::Inhibit),
        stim(56.0, 10.0, 0.002, StimulusMode::Inhibit),
    ];
    s
}

fn e3() -> Scenario {
    let mut s = Scenario::new("E3", 60.0, 3).with_overrides(Overrides {
        bias_v: Some(0.012),
        ..Overrides::default()
    });
    s.stimuli = (1..15)
        .map(|k| stim(4.0 * k as f64, 1.0, 0.2, StimulusMode::Excite))
        .collect();
    s
}

fn e4() -> Scenario {
    let mut s = Scenario::new("E4", 60.0, 4).with_overrides(Overrides {
        bias_v: Some(-0.030),
        ..Overrides::default()
    });
    s.stimuli = (0..26)
        .map(|k| stim(8.0 + 2.0 * k as f64, 1.0, 1.0, StimulusMode::Excite))
        .collect();
    s
}

pub fn builtins() -> Vec<Scenario> {
    vec![e1(), e2(), e3(), e4()]
}

pub fn builtin_names() -> Vec<&'static str> {
    vec!["E1", "E2", "E3", "E4"]
}

/// Case-insensitive lookup by name.
pub fn builtin(name: &str) -> Option<Scenario> {
    builtins().into_iter().find(|s| s.name.eq_ignore_ascii_case(name))
}
