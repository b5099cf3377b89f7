//! Fixtures shared by the criterion benches in `benches/`.

use marblebot_core::lab::{builtin, Scenario};
use marblebot_core::oregonator::find_limit_cycle;
use marblebot_core::{calibrate, Marble, OscillatorParams, OscillatorState};

/// A canonical marble starting at the top of its limit cycle.
pub fn canonical_marble(seed: u64) -> Marble {
    let p = OscillatorParams::default();
    let cycle = find_limit_cycle(&p, 0.0).expect("canonical cycle");
    let calib = calibrate(&p, 0.040).expect("canonical calibration");
    let start = cycle.peak_state.unwrap_or(OscillatorState::new(0.5, 0.3));
    Marble::with_seed(p, calib, start, seed).expect("valid marble")
}

pub fn scenario(name: &str) -> Scenario {
    builtin(name).unwrap_or_else(|| panic!("no builtin {name}"))
}
