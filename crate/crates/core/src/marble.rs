//! The liquid marble: oscillator chemistry behind a pair of electrodes, lit
//! by a scheduled laser and read through a noisy, quantizing ADC.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycles;
use crate::oregonator::{self, Integrator, OscillatorError, OscillatorParams, OscillatorState};

/// Raw sampling interval, seconds.
pub const SAMPLE_PERIOD: f64 = 0.01;
/// Raw samples per second.
pub const SAMPLES_PER_SECOND: u64 = 100;
/// Default peak-to-peak potential produced by [`calibrate`], volts.
pub const DEFAULT_TARGET_AMP: f64 = 0.040;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarbleError {
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),
    #[error("stimulus at t = {t_on} s is in the past (now {now} s)")]
    PastStimulus { t_on: f64, now: f64 },
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error("calibration needs an oscillating system: {0}")]
    NotOscillating(String),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusMode {
    /// Adds `amplitude` to the light intensity for the whole pulse.
    Inhibit,
    /// Kicks the activator by `amplitude` once, at `t_on`.
    Excite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserStimulus {
    pub t_on: f64,
    pub duration: f64,
    pub amplitude: f64,
    pub mode: StimulusMode,
}

impl LaserStimulus {
    pub const DEFAULT_DURATION: f64 = 10.0;

    pub fn new(t_on: f64, duration: f64, amplitude: f64, mode: StimulusMode) -> Result<Self, MarbleError> {
        let s = Self {
            t_on,
            duration,
            amplitude,
            mode,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn inhibit(t_on: f64, duration: f64, amplitude: f64) -> Result<Self, MarbleError> {
        Self::new(t_on, duration, amplitude, StimulusMode::Inhibit)
    }

    pub fn excite(t_on: f64, duration: f64, amplitude: f64) -> Result<Self, MarbleError> {
        Self::new(t_on, duration, amplitude, StimulusMode::Excite)
    }

    pub fn validate(&self) -> Result<(), MarbleError> {
        if !self.t_on.is_finite() || self.t_on < 0.0 {
            return Err(MarbleError::InvalidStimulus(format!(
                "t_on {} must be finite and >= 0",
                self.t_on
            )));
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(MarbleError::InvalidStimulus(format!(
                "duration {} must be > 0",
                self.duration
            )));
        }
        if !self.amplitude.is_finite() || self.amplitude <= 0.0 {
            return Err(MarbleError::InvalidStimulus(format!(
                "amplitude {} must be > 0",
                self.amplitude
            )));
        }
        Ok(())
    }

    pub fn t_off(&self) -> f64 {
        self.t_on + self.duration
    }

    /// Whether the laser is lit at `t`; the pulse covers `[t_on, t_off)`.
    pub fn covers(&self, t: f64) -> bool {
        t >= self.t_on && t < self.t_off()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeCalibration {
    /// Volts per unit of `v`; the sign sets the electrode polarity.
    pub gain: f64,
    pub v_ref: f64,
    pub noise_std: f64,
    pub adc_step: f64,
}

impl ElectrodeCalibration {
    pub const DEFAULT_NOISE_STD: f64 = 0.5e-3;
    pub const DEFAULT_ADC_STEP: f64 = 0.2e-3;

    pub fn new(gain: f64, v_ref: f64) -> Self {
        Self {
            gain,
            v_ref,
            noise_std: Self::DEFAULT_NOISE_STD,
            adc_step: Self::DEFAULT_ADC_STEP,
        }
    }

    pub fn validate(&self) -> Result<(), MarbleError> {
        let finite = [self.gain, self.v_ref, self.noise_std, self.adc_step]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.gain == 0.0 || self.adc_step <= 0.0 || self.noise_std < 0.0 {
            return Err(MarbleError::InvalidCalibration(format!(
                "need finite fields, gain != 0, adc_step > 0, noise_std >= 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// Shift the potential by `bias` volts.
    pub fn with_bias(mut self, bias: f64) -> Self {
        self.v_ref -= bias / self.gain;
        self
    }

    pub fn inverted(mut self) -> Self {
        self.gain = -self.gain;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSample {
    pub t: f64,
    pub volts: f64,
    pub laser_on: bool,
}

/// Unquantized electrode potential, `gain·(v − v_ref)` plus Gaussian noise.
/// One standard normal is drawn per call even when `noise_std` is zero.
pub fn potential<R: Rng + ?Sized>(state: &OscillatorState, calib: &ElectrodeCalibration, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    calib.gain * (state.v - calib.v_ref) + calib.noise_std * z
}

/// Nearest multiple of `adc_step`, ties away from zero.
pub fn quantize_adc(volts: f64, adc_step: f64) -> f64 {
    let inv = 1.0 / adc_step;
    let whole = inv.round();
    // Divide by an integral reciprocal when there is one so the result is
    // the double nearest to the decimal multiple.
    let out = if (inv - whole).abs() <= 1e-9 * whole {
        (volts * whole).round() / whole
    } else {
        (volts / adc_step).round() * adc_step
    };
    out + 0.0
}

fn calibration_for(amplitude_v: f64, mean_v: f64, target_amp: f64) -> Result<ElectrodeCalibration, MarbleError> {
    if !target_amp.is_finite() || target_amp <= 0.0 {
        return Err(MarbleError::InvalidCalibration(format!(
            "target amplitude {target_amp} must be > 0"
        )));
    }
    if !amplitude_v.is_finite() || amplitude_v <= 0.0 {
        return Err(MarbleError::NotOscillating("zero amplitude".into()));
    }
    let calib = ElectrodeCalibration::new(target_amp / amplitude_v, mean_v);
    calib.validate()?;
    Ok(calib)
}

/// Gain and reference level putting the unforced cycle at `target_amp`
/// volts peak-to-peak around zero mean.
pub fn calibrate(params: &OscillatorParams, target_amp: f64) -> Result<ElectrodeCalibration, MarbleError> {
    let cycle = oregonator::find_limit_cycle(params, params.phi0)?;
    calibrate_from_cycle(&cycle, target_amp)
}

pub fn calibrate_from_cycle(
    cycle: &oregonator::LimitCycleSummary,
    target_amp: f64,
) -> Result<ElectrodeCalibration, MarbleError> {
    if !cycle.oscillating {
        return Err(MarbleError::NotOscillating(format!("{} maxima found", cycle.cycles)));
    }
    calibration_for(cycle.amplitude_v, cycle.mean_v, target_amp)
}

/// Same rule applied to an already sampled `v(t)`.
pub fn calibrate_from_series(t: &[f64], v: &[f64], target_amp: f64) -> Result<ElectrodeCalibration, MarbleError> {
    let c = cycles::analyze(t, v, cycles::DEFAULT_BAND_FRACTION, oregonator::MIN_SWING);
    if c.significant_peaks < oregonator::MIN_MAXIMA {
        return Err(MarbleError::NotOscillating(format!(
            "{} significant maxima",
            c.significant_peaks
        )));
    }
    let mean = c
        .mean
        .ok_or_else(|| MarbleError::NotOscillating("no whole cycle".into()))?;
    calibration_for(c.amplitude, mean, target_amp)
}

/// A marble advancing on the 10 ms sampling grid.
#[derive(Debug, Clone)]
pub struct Marble {
    params: OscillatorParams,
    calib: ElectrodeCalibration,
    integrator: Integrator,
    state: OscillatorState,
    tick: u64,
    schedule: Vec<LaserStimulus>,
    rng: ChaCha8Rng,
    last: PotentialSample,
}

impl Marble {
    /// Takes the first sample at `t = 0` immediately.
    pub fn new(
        params: OscillatorParams,
        calib: ElectrodeCalibration,
        state: OscillatorState,
        rng: ChaCha8Rng,
    ) -> Result<Self, MarbleError> {
        params.validate()?;
        calib.validate()?;
        state.validate()?;
        let mut m = Self {
            params,
            calib,
            integrator: Integrator::default(),
            state,
            tick: 0,
            schedule: Vec::new(),
            rng,
            last: PotentialSample {
                t: 0.0,
                volts: 0.0,
                laser_on: false,
            },
        };
        m.last = m.sample();
        Ok(m)
    }

    pub fn with_seed(
        params: OscillatorParams,
        calib: ElectrodeCalibration,
        state: OscillatorState,
        seed: u64,
    ) -> Result<Self, MarbleError> {
        Self::new(params, calib, state, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn calibration(&self) -> &ElectrodeCalibration {
        &self.calib
    }

    pub fn state(&self) -> OscillatorState {
        self.state
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Current simulation time, seconds.
    pub fn time(&self) -> f64 {
        tick_time(self.tick)
    }

    pub fn schedule(&self) -> &[LaserStimulus] {
        &self.schedule
    }

    /// Sample taken at the current instant.
    pub fn last_sample(&self) -> PotentialSample {
        self.last
    }

    /// Queue a stimulus; pulses starting now take effect from the next tick.
    pub fn schedule_laser(&mut self, stimulus: LaserStimulus) -> Result<usize, MarbleError> {
        stimulus.validate()?;
        let now = self.time();
        if stimulus.t_on < now {
            return Err(MarbleError::PastStimulus {
                t_on: stimulus.t_on,
                now,
            });
        }
        let at = self.schedule.partition_point(|s| s.t_on <= stimulus.t_on);
        self.schedule.insert(at, stimulus);
        Ok(self.schedule.len())
    }

    /// Light intensity at `t`: `phi0` plus the strongest covering inhibit pulse.
    pub fn phi_at(&self, t: f64) -> f64 {
        self.params.phi0 + self.inhibit_at(t)
    }

    fn inhibit_at(&self, t: f64) -> f64 {
        self.schedule
            .iter()
            .filter(|s| s.mode == StimulusMode::Inhibit && s.covers(t))
            .map(|s| s.amplitude)
            .fold(0.0, f64::max)
    }

    pub fn laser_on(&self, t: f64) -> bool {
        self.schedule.iter().any(|s| s.covers(t))
    }

    fn sample(&mut self) -> PotentialSample {
        let t = self.time();
        let raw = potential(&self.state, &self.calib, &mut self.rng);
        PotentialSample {
            t,
            volts: quantize_adc(raw, self.calib.adc_step),
            laser_on: self.laser_on(t),
        }
    }

    /// Integrate one sampling interval and take the next sample.
    pub fn advance(&mut self) -> Result<PotentialSample, MarbleError> {
        let a = self.time();
        let b = tick_time(self.tick + 1);

        let mut cuts: Vec<f64> = Vec::new();
        for s in &self.schedule {
            for edge in [s.t_on, s.t_off()] {
                if edge > a && edge < b {
                    cuts.push(edge);
                }
            }
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut state = self.state;
        let mut t = a;
        for end in cuts {
            for s in &self.schedule {
                if s.mode == StimulusMode::Excite && s.t_on >= a && s.t_on < b && s.t_on == t {
                    state.u += s.amplitude;
                }
            }
            let phi = self.phi_at(0.5 * (t + end));
            state = self.integrator.step(state, t, end - t, &self.params, |_| phi)?;
            t = end;
        }

        self.state = state;
        self.tick += 1;
        self.last = self.sample();
        Ok(self.last)
    }
}

/// Simulation time of raw sample `tick`.
pub fn tick_time(tick: u64) -> f64 {
    tick as f64 / SAMPLES_PER_SECOND as f64
}

/// Nearest raw tick to `t` seconds.
pub fn time_tick(t: f64) -> u64 {
    (t * SAMPLES_PER_SECOND as f64).round().max(0.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quiet(gain: f64, v_ref: f64) -> ElectrodeCalibration {
        ElectrodeCalibration {
            noise_std: 0.0,
            ..ElectrodeCalibration::new(gain, v_ref)
        }
    }

    fn marble() -> Marble {
        let p = OscillatorParams::default();
        Marble::with_seed(p, quiet(0.16, 0.07), OscillatorState::new(0.5, 0.3), 1).unwrap()
    }

    #[test]
    fn schedule_is_sorted_and_rejects_past() {
        let mut m = marble();
        assert_eq!(
            m.schedule_laser(LaserStimulus::inhibit(32.0, 10.0, 0.2).unwrap())
                .unwrap(),
            1
        );
        assert_eq!(
            m.schedule_laser(LaserStimulus::inhibit(10.0, 10.0, 0.2).unwrap())
                .unwrap(),
            2
        );
        let order: Vec<f64> = m.schedule().iter().map(|s| s.t_on).collect();
        assert_eq!(order, vec![10.0, 32.0]);
        for _ in 0..5 {
            m.advance().unwrap();
        }
        assert!(matches!(
            m.schedule_laser(LaserStimulus::inhibit(0.01, 1.0, 0.1).unwrap()),
            Err(MarbleError::PastStimulus { .. })
        ));
    }

    #[test]
    fn stimulus_validation() {
        assert!(LaserStimulus::inhibit(1.0, 0.0, 0.2).is_err());
        assert!(LaserStimulus::excite(1.0, 1.0, 0.0).is_err());
        assert!(LaserStimulus::excite(-1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn phi_overlap_takes_max() {
        let mut m = marble();
        assert_eq!(m.phi_at(5.0), 0.0);
        m.schedule_laser(LaserStimulus::inhibit(10.0, 10.0, 0.2).unwrap())
            .unwrap();
        assert_eq!(m.phi_at(12.0), 0.2);
        m.schedule_laser(LaserStimulus::inhibit(11.0, 5.0, 0.1).unwrap())
            .unwrap();
        m.schedule_laser(LaserStimulus::excite(11.0, 5.0, 0.5).unwrap())
            .unwrap();
        assert_eq!(m.phi_at(12.0), 0.2);
        assert_eq!(m.phi_at(20.0), 0.0);
    }

    #[test]
    fn potential_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = OscillatorState::new(0.1, 0.4);
        assert_eq!(potential(&s, &quiet(0.2, 0.4), &mut rng), 0.0);
        let s = OscillatorState::new(0.1, 0.5);
        assert!((potential(&s, &quiet(0.2, 0.4), &mut rng) - 0.020).abs() < 1e-15);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_adc(0.0, 0.0002), 0.0);
        assert_eq!(quantize_adc(0.00063, 0.0002), 0.0006);
        assert_eq!(quantize_adc(-0.00011, 0.0002), -0.0002);
        assert!(quantize_adc(-0.00001, 0.0002).is_sign_positive());
    }

    #[test]
    fn synthetic_sine_calibration() {
        let t: Vec<f64> = (0..40_001).map(|i| i as f64 * 0.001).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|s| 0.4 + 0.1 * (std::f64::consts::TAU * s / 3.0).sin())
            .collect();
        let c = calibrate_from_series(&t, &v, 0.040).unwrap();
        assert!((c.v_ref - 0.4).abs() < 1e-6);
        assert!((c.gain - 0.2).abs() < 1e-6);
    }

    #[test]
    fn suppressed_system_cannot_be_calibrated() {
        let p = OscillatorParams {
            phi0: 0.2,
            ..OscillatorParams::default()
        };
        assert!(matches!(calibrate(&p, 0.040), Err(MarbleError::NotOscillating(_))));
    }

    #[test]
    fn bias_shifts_the_potential() {
        let c = quiet(-0.16, 0.07).with_bias(0.005);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = OscillatorState::new(0.1, 0.07);
        assert!((potential(&s, &c, &mut rng) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn laser_flag_follows_pulse() {
        let mut m = marble();
        m.schedule_laser(LaserStimulus::excite(0.05, 0.025, 0.1).unwrap())
            .unwrap();
        let flags: Vec<bool> = (0..10).map(|_| m.advance().unwrap().laser_on).collect();
        assert_eq!(
            flags,
            [false, false, false, false, true, true, true, false, false, false]
        );
    }

    #[test]
    fn excite_kicks_once() {
        let p = OscillatorParams::default();
        let s0 = OscillatorState::new(0.02, 0.1);
        let mut kicked = Marble::with_seed(p, quiet(0.16, 0.07), s0, 1).unwrap();
        let mut plain = Marble::with_seed(p, quiet(0.16, 0.07), s0, 1).unwrap();
        kicked
            .schedule_laser(LaserStimulus::excite(0.0, 10.0, 0.2).unwrap())
            .unwrap();
        kicked.advance().unwrap();
        plain.advance().unwrap();
        assert!(kicked.state().u > plain.state().u + 0.05);
    }

    #[test]
    fn identical_seed_identical_stream() {
        let p = OscillatorParams::default();
        let c = ElectrodeCalibration::new(0.16, 0.07);
        let run = || {
            let mut m = Marble::with_seed(p, c, OscillatorState::new(0.5, 0.3), 99).unwrap();
            m.schedule_laser(LaserStimulus::inhibit(1.0, 1.0, 0.2).unwrap())
                .unwrap();
            (0..300)
                .map(|_| m.advance().unwrap().volts.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    proptest! {
        #[test]
        fn quantize_is_nearest_multiple(v in -0.2..0.2f64) {
            let step = ElectrodeCalibration::DEFAULT_ADC_STEP;
            let q = quantize_adc(v, step);
            prop_assert!((q - v).abs() <= step / 2.0 + 1e-15);
            let k = q / step;
            prop_assert!((k - k.round()).abs() < 1e-9);
            // Exact decimal representation at four places.
            prop_assert_eq!(format!("{q:.4}").parse::<f64>().unwrap(), q);
        }

        #[test]
        fn emitted_samples_are_adc_multiples(seed in 0u64..1000) {
            let p = OscillatorParams::default();
            let mut m = Marble::with_seed(
                p, ElectrodeCalibration::new(0.16, 0.07), OscillatorState::new(0.5, 0.3), seed,
            ).unwrap();
            for _ in 0..50 {
                let s = m.advance().unwrap();
                let k = s.volts / 0.0002;
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }
}
