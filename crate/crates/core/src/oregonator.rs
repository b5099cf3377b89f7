//! Two-variable photosensitive Oregonator.
//!
//! In dimensionless time τ:
//!
//! ```text
//! du/dτ = (u − u² − (f·v + φ)·(u − q)/(u + q)) / ε
//! dv/dτ = u − v
//! ```
//!
//! `u` is the autocatalytic activator and `v` the oxidized catalyst, the
//! quantity the electrodes sense. Light enters as the additive inhibitory flux
//! `φ`. Wall-clock seconds map to τ through `t_scale`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycles;
use crate::integrator::{self, Tolerances, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscillatorError {
    #[error("invalid oscillator input: {0}")]
    Domain(String),
    #[error("invalid oscillator parameters: {0}")]
    InvalidParams(String),
    #[error("integration failed after t = {last_good_time} s: {reason}")]
    Integration { last_good_time: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub epsilon: f64,
    pub f: f64,
    pub q: f64,
    /// Baseline light intensity.
    pub phi0: f64,
    /// Seconds of simulated wall-clock time per dimensionless time unit.
    pub t_scale: f64,
}

impl Default for OscillatorParams {
    /// Canonical oscillatory set. `t_scale = 4 s` puts the unforced period
    /// at about 20.4 s.
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            f: 1.4,
            q: 0.002,
            phi0: 0.0,
            t_scale: 4.0,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<(), OscillatorError> {
        let fields = [
            ("epsilon", self.epsilon),
            ("f", self.f),
            ("q", self.q),
            ("phi0", self.phi0),
            ("t_scale", self.t_scale),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(OscillatorError::InvalidParams(format!("{name} is not finite")));
        }
        if self.epsilon <= 0.0 || self.f <= 0.0 || self.t_scale <= 0.0 {
            return Err(OscillatorError::InvalidParams(
                "epsilon, f and t_scale must be positive".into(),
            ));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(OscillatorError::InvalidParams("q must lie in (0, 1)".into()));
        }
        if self.phi0 < 0.0 {
            return Err(OscillatorError::InvalidParams("phi0 must be non-negative".into()));
        }
        Ok(())
    }

    // What the rate formula itself needs; `f = 0` decouples the pair and is
    // allowed here.
    fn check_formula(&self) -> Result<(), OscillatorError> {
        let ok = [self.epsilon, self.f, self.q].iter().all(|v| v.is_finite())
            && self.epsilon > 0.0
            && self.q > 0.0
            && self.f >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(OscillatorError::InvalidParams(
                "rate formula needs finite epsilon > 0, q > 0, f >= 0".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorState {
    pub u: f64,
    pub v: f64,
}

impl OscillatorState {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn validate(&self) -> Result<(), OscillatorError> {
        if !self.u.is_finite() || !self.v.is_finite() {
            return Err(OscillatorError::Domain("state is not finite".into()));
        }
        if self.u <= 0.0 || self.v < 0.0 {
            return Err(OscillatorError::Domain(format!(
                "state (u = {}, v = {}) outside u > 0, v >= 0",
                self.u, self.v
            )));
        }
        Ok(())
    }

    fn as_vec(self) -> Vec2 {
        [self.u, self.v]
    }
}

#[inline]
fn rates(y: Vec2, p: &OscillatorParams, phi: f64) -> Vec2 {
    let (u, v) = (y[0], y[1]);
    let du = (u - u * u - (p.f * v + phi) * (u - p.q) / (u + p.q)) / p.epsilon;
    [du, u - v]
}

/// Rates `(du/dτ, dv/dτ)` in dimensionless time.
pub fn derivatives(state: OscillatorState, params: &OscillatorParams, phi: f64) -> Result<(f64, f64), OscillatorError> {
    state.validate()?;
    params.check_formula()?;
    if !phi.is_finite() || phi < 0.0 {
        return Err(OscillatorError::Domain(format!(
            "light intensity {phi} must be finite and >= 0"
        )));
    }
    let r = rates(state.as_vec(), params, phi);
    Ok((r[0], r[1]))
}

/// Adaptive integrator for the oscillator. Defaults to `atol = 1e-8`,
/// `rtol = 1e-6`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Integrator {
    pub tolerances: Tolerances,
}

impl Integrator {
    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        Self {
            tolerances: Tolerances {
                atol,
                rtol,
                ..Tolerances::default()
            },
        }
    }

    /// Reference-grade tolerances (`1e-12`, `1e-10`).
    pub fn fine() -> Self {
        Self::with_tolerances(1e-12, 1e-10)
    }

    /// Advance `state` from `t0` by `dt` seconds. `phi_of_t` maps simulation
    /// seconds to light intensity and is expected to be piecewise constant;
    /// callers split at its discontinuities.
    pub fn step<P>(
        &self,
        state: OscillatorState,
        t0: f64,
        dt: f64,
        params: &OscillatorParams,
        phi_of_t: P,
    ) -> Result<OscillatorState, OscillatorError>
    where
        P: Fn(f64) -> f64,
    {
        state.validate()?;
        params.validate()?;
        if !dt.is_finite() || dt < 0.0 || !t0.is_finite() {
            return Err(OscillatorError::Domain(format!("bad time step t0 = {t0}, dt = {dt}")));
        }
        if dt == 0.0 {
            return Ok(state);
        }
        let scale = params.t_scale;
        let span = dt / scale;
        let rhs = |tau: f64, y: Vec2| rates(y, params, phi_of_t(t0 + tau * scale));
        let admissible = |y: Vec2| y[0] > 0.0 && y[1] >= 0.0;
        match integrator::integrate(rhs, admissible, state.as_vec(), span, &self.tolerances) {
            Ok((y, _)) => Ok(OscillatorState::new(y[0], y[1])),
            Err(fail) => Err(OscillatorError::Integration {
                last_good_time: t0 + fail.at * scale,
                reason: fail.reason.to_string(),
            }),
        }
    }
}

/// [`Integrator::step`] at the default tolerances.
pub fn step<P>(
    state: OscillatorState,
    t0: f64,
    dt: f64,
    params: &OscillatorParams,
    phi_of_t: P,
) -> Result<OscillatorState, OscillatorError>
where
    P: Fn(f64) -> f64,
{
    Integrator::default().step(state, t0, dt, params, phi_of_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCycleSummary {
    /// Mean inter-peak interval of `v`, seconds. Zero when not oscillating.
    pub period: f64,
    /// Mean peak minus mean trough of `v`.
    pub amplitude_v: f64,
    pub oscillating: bool,
    /// Number of confirmed maxima in the observation window.
    pub cycles: usize,
    /// Relative standard deviation of the inter-peak intervals.
    pub period_rel_std: f64,
    /// Time-average of `v` over the whole cycles observed.
    pub mean_v: f64,
    /// State at the first confirmed maximum of `v` (phase zero).
    pub peak_state: Option<OscillatorState>,
}

/// Settings for [`find_limit_cycle`]; all lengths in dimensionless time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSearch {
    pub transient: f64,
    pub window: f64,
    pub sample_dt: f64,
    pub start: OscillatorState,
    pub integrator: Integrator,
}

impl Default for CycleSearch {
    fn default() -> Self {
        Self {
            transient: 20.0,
            window: 80.0,
            sample_dt: 0.002,
            start: OscillatorState::new(0.5, 0.3),
            integrator: Integrator::default(),
        }
    }
}

/// Smallest peak-to-trough drop of `v` that counts as an oscillation.
pub const MIN_SWING: f64 = 1e-3;
/// Maxima needed before a trajectory is called oscillating.
pub const MIN_MAXIMA: usize = 3;

impl CycleSearch {
    pub fn run(&self, params: &OscillatorParams, phi: f64) -> Result<LimitCycleSummary, OscillatorError> {
        params.validate()?;
        if !phi.is_finite() || phi < 0.0 {
            return Err(OscillatorError::Domain(format!(
                "light intensity {phi} must be finite and >= 0"
            )));
        }
        let light = |_: f64| phi;
        let scale = params.t_scale;
        let mut state = self
            .integrator
            .step(self.start, 0.0, self.transient * scale, params, light)?;

        let n = (self.window / self.sample_dt).round() as usize;
        let h = self.sample_dt * scale;
        let t0 = self.transient * scale;
        let mut ts = Vec::with_capacity(n + 1);
        let mut vs = Vec::with_capacity(n + 1);
        let mut states = Vec::with_capacity(n + 1);
        ts.push(t0);
        vs.push(state.v);
        states.push(state);
        for i in 0..n {
            let t = t0 + i as f64 * h;
            state = self.integrator.step(state, t, h, params, light)?;
            ts.push(t0 + (i + 1) as f64 * h);
            vs.push(state.v);
            states.push(state);
        }

        let c = cycles::analyze(&ts, &vs, cycles::DEFAULT_BAND_FRACTION, MIN_SWING);
        let oscillating = c.significant_peaks >= MIN_MAXIMA;
        Ok(LimitCycleSummary {
            period: if oscillating { c.period.unwrap_or(0.0) } else { 0.0 },
            amplitude_v: if oscillating { c.amplitude } else { 0.0 },
            oscillating,
            cycles: c.peaks.len(),
            period_rel_std: c.period_rel_std.unwrap_or(0.0),
            mean_v: c.mean.unwrap_or_else(|| cycles::trapezoid_mean(&ts, &vs)),
            peak_state: c.peaks.first().map(|p| states[p.index]),
        })
    }
}

/// Integrates past the transient and reports the cycle carried by `v` under
/// constant light `phi`.
pub fn find_limit_cycle(params: &OscillatorParams, phi: f64) -> Result<LimitCycleSummary, OscillatorError> {
    CycleSearch::default().run(params, phi)
}

/// State at `phase` (fraction of a period after a maximum of `v`) on the
/// unforced limit cycle.
pub fn state_at_phase(
    params: &OscillatorParams,
    cycle: &LimitCycleSummary,
    phase: f64,
) -> Result<OscillatorState, OscillatorError> {
    let start = cycle
        .peak_state
        .filter(|_| cycle.oscillating)
        .ok_or_else(|| OscillatorError::Domain("no limit cycle to place a phase on".into()))?;
    let phase = phase.rem_euclid(1.0);
    let phi0 = params.phi0;
    step(start, 0.0, phase * cycle.period, params, |_| phi0)
}
