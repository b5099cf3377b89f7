use marblebot_core::lab::{characterize_response, run_scenario_with, ResponseClass, Scenario};
use marblebot_core::marble::{calibrate, Marble};
use marblebot_core::oregonator::{find_limit_cycle, step};
use marblebot_core::{ElectrodeCalibration, LaserStimulus, OscillatorParams, OscillatorState, StimulusMode};
use proptest::prelude::*;

fn canonical() -> OscillatorParams {
    OscillatorParams::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_stay_positive(
        u in 1e-6..1.5f64,
        v in 0.0..1.5f64,
        phi in 0.0..0.3f64,
        dt in 0.01..5.0f64,
    ) {
        let p = canonical();
        let mut s = OscillatorState::new(u, v);
        let mut t = 0.0;
        while t < 60.0 {
            s = step(s, t, dt, &p, |_| phi).unwrap();
            prop_assert!(s.u > 0.0 && s.v >= 0.0 && s.u.is_finite() && s.v.is_finite());
            t += dt;
        }
        // Attracted into the bounded region by now.
        prop_assert!(s.u < 2.0 && s.v < 2.0);
    }

    #[test]
    fn step_splitting_is_consistent(split in 0.1..9.9f64) {
        let p = canonical();
        let s0 = OscillatorState::new(0.4, 0.2);
        let whole = step(s0, 0.0, 10.0, &p, |_| 0.0).unwrap();
        let half = step(s0, 0.0, split, &p, |_| 0.0).unwrap();
        let parts = step(half, split, 10.0 - split, &p, |_| 0.0).unwrap();
        prop_assert!((whole.v - parts.v).abs() < 1e-4);
    }
}

#[test]
fn suppression_is_monotone_in_light() {
    let p = canonical();
    let flags: Vec<bool> = [0.0, 0.05, 0.1, 0.15, 0.2]
        .iter()
        .map(|&phi| find_limit_cycle(&p, phi).unwrap().oscillating)
        .collect();
    assert!(flags[0]);
    assert!(!flags[4]);
    if let Some(first_off) = flags.iter().position(|f| !f) {
        assert!(flags[first_off..].iter().all(|f| !f), "{flags:?}");
    }
}

#[test]
fn reported_cycles_have_positive_amplitude() {
    let p = canonical();
    for phi in [0.0, 0.001, 0.002, 0.003] {
        let c = find_limit_cycle(&p, phi).unwrap();
        if c.oscillating {
            assert!(c.amplitude_v > 0.0 && c.period > 0.0, "phi {phi}: {c:?}");
        }
    }
}

fn quiet_marble(seed: u64) -> Marble {
    let p = canonical();
    let c = find_limit_cycle(&p, 0.0).unwrap();
    let calib = ElectrodeCalibration {
        noise_std: 0.0,
        ..calibrate(&p, 0.040).unwrap()
    };
    Marble::with_seed(p, calib, c.peak_state.unwrap(), seed).unwrap()
}

#[test]
fn calibrated_potential_crosses_zero_twice_per_period() {
    let mut m = quiet_marble(1);
    let period = find_limit_cycle(&canonical(), 0.0).unwrap().period;
    let samples: Vec<f64> = (0..(10.0 * period * 100.0) as usize)
        .map(|_| m.advance().unwrap().volts)
        .collect();
    let per_period = (period * 100.0) as usize;
    for chunk in samples.chunks_exact(per_period) {
        let crossings = chunk.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
        assert!(crossings >= 2, "{crossings} crossings");
    }
}

#[test]
fn long_run_mean_potential_is_near_zero() {
    let p = canonical();
    let calib = calibrate(&p, 0.040).unwrap();
    let c = find_limit_cycle(&p, 0.0).unwrap();
    let mut m = Marble::with_seed(p, calib, c.peak_state.unwrap(), 11).unwrap();
    let n = 60_000;
    let mean = (0..n).map(|_| m.advance().unwrap().volts).sum::<f64>() / n as f64;
    assert!(mean.abs() < 0.002, "mean {mean}");
}

/// A run whose stimulus starts at `phase` of a period after a maximum of v.
fn response_run(mode: StimulusMode, amplitude: f64, phase: f64, noise: f64) -> (Scenario, LaserStimulus) {
    let period = find_limit_cycle(&canonical(), 0.0).unwrap().period;
    let t_on = 50.0;
    let stim = LaserStimulus::new(t_on, 10.0, amplitude, mode).unwrap();
    let mut s = Scenario::new("response", 100.0, 5).with_stimulus(stim);
    s.overrides.initial_phase = Some((phase - t_on / period).rem_euclid(1.0));
    s.overrides.noise_std = Some(noise);
    (s, stim)
}

#[test]
fn suppressing_pulse_inhibits() {
    for noise in [0.0, 0.5e-3] {
        let (s, stim) = response_run(StimulusMode::Inhibit, 0.2, 0.55, noise);
        let trace = run_scenario_with(&s, true).unwrap();
        let r = characterize_response(&trace, &stim).unwrap();
        assert_eq!(r.class, ResponseClass::Inhibition, "{r:?}");
        assert!(r.amplitude_after < 0.25 * r.amplitude_before, "{r:?}");
    }
}

#[test]
fn excite_pulse_shifts_level() {
    for noise in [0.0, 0.5e-3] {
        let (s, stim) = response_run(StimulusMode::Excite, 0.2, 0.3, noise);
        let trace = run_scenario_with(&s, true).unwrap();
        let r = characterize_response(&trace, &stim).unwrap();
        assert_eq!(r.class, ResponseClass::LevelShift, "{r:?}");
        assert!(r.excursion.abs() >= 0.005, "{r:?}");
    }
}

#[test]
fn sub_threshold_pulse_has_no_effect() {
    let (s, _) = response_run(StimulusMode::Inhibit, 0.001, 0.55, 0.5e-3);
    let trace = run_scenario_with(&s, true).unwrap();
    let r = characterize_response(&trace, &s.stimuli[0]).unwrap();
    assert_eq!(r.class, ResponseClass::NoEffect, "{r:?}");
}

#[test]
fn zero_amplitude_pulse_has_no_effect() {
    let (mut s, mut stim) = response_run(StimulusMode::Inhibit, 0.2, 0.55, 0.5e-3);
    s.stimuli.clear();
    stim.amplitude = 0.0;
    let trace = run_scenario_with(&s, true).unwrap();
    let r = characterize_response(&trace, &stim).unwrap();
    assert_eq!(r.class, ResponseClass::NoEffect, "{r:?}");
}
