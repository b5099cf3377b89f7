//! Simulation of a robot steered by the electrical potential of a
//! Belousov-Zhabotinsky liquid marble.
//!
//! The layers, bottom up:
//!
//! * [`oregonator`]: the two-variable photosensitive Oregonator and its
//!   adaptive integrator.
//! * [`marble`]: laser scheduling, the electrode transfer map, noise and ADC.
//! * [`controller`]: the sign-with-dead-band steering law.
//! * [`robot`]: discrete turn-and-advance kinematics.
//! * [`lab`]: scenarios, the clocked simulation, traces and analyses.

pub mod controller;
pub mod cycles;
pub mod integrator;
pub mod lab;
pub mod marble;
pub mod oregonator;
pub mod robot;

pub use controller::{control_tick, decide, ControlConfig, ControlError, SteerDecision, TickOutcome};
pub use lab::{
    characterize_response, fit_normal, histogram, read_trace, run_scenario, write_trace, ExperimentTrace, GaussianFit,
    ResponseClass, ResponseReport, RunError, Scenario, Simulation,
};
pub use marble::{
    calibrate, potential, quantize_adc, ElectrodeCalibration, LaserStimulus, Marble, MarbleError, PotentialSample,
    StimulusMode,
};
pub use oregonator::{
    derivatives, find_limit_cycle, step, LimitCycleSummary, OscillatorError, OscillatorParams, OscillatorState,
};
pub use robot::{apply, trajectory, MotionConfig, Pose};
