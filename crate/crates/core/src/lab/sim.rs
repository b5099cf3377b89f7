use thiserror::Error;

use super::scenario::{noise_rng, Scenario, ScenarioError, Setup};
use super::trace::ExperimentTrace;
use crate::controller::{self, ControlError, TickOutcome};
use crate::marble::{self, LaserStimulus, Marble, MarbleError, PotentialSample};
use crate::robot::Pose;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Marble(#[from] MarbleError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

/// Output of one 10 ms tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub sample: PotentialSample,
    /// Present on control ticks only.
    pub control: Option<TickOutcome>,
}

/// Marble, controller and robot on one virtual clock. The scenario's
/// duration is advisory here; [`Simulation::is_finished`] reports it.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    setup: Setup,
    marble: Marble,
    pose: Pose,
    end_tick: u64,
    first_control_tick: u64,
    control_every: u64,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        let setup = scenario.setup()?;
        let mut marble = Marble::new(
            setup.params,
            setup.calibration,
            setup.initial_state,
            noise_rng(scenario.seed),
        )?;
        for s in &scenario.stimuli {
            marble.schedule_laser(*s)?;
        }
        Ok(Self {
            scenario: scenario.clone(),
            pose: setup.start_pose,
            end_tick: marble::time_tick(scenario.duration),
            first_control_tick: marble::time_tick(setup.control.startup_delay),
            control_every: marble::time_tick(setup.control.decision_period),
            setup,
            marble,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    pub fn marble(&self) -> &Marble {
        &self.marble
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn time(&self) -> f64 {
        self.marble.time()
    }

    pub fn is_finished(&self) -> bool {
        self.marble.tick() >= self.end_tick
    }

    /// Sample at the current instant (`t = 0` before the first tick).
    pub fn current_sample(&self) -> PotentialSample {
        self.marble.last_sample()
    }

    /// Time the next tick lands on.
    pub fn next_tick_time(&self) -> f64 {
        marble::tick_time(self.marble.tick() + 1)
    }

    /// Queue a stimulus; it must not start before the current instant.
    pub fn schedule_laser(&mut self, stimulus: LaserStimulus) -> Result<usize, MarbleError> {
        self.marble.schedule_laser(stimulus)
    }

    fn is_control_tick(&self, tick: u64) -> bool {
        tick >= self.first_control_tick && (tick - self.first_control_tick).is_multiple_of(self.control_every)
    }

    pub fn tick(&mut self) -> Result<Tick, SimError> {
        let sample = self.marble.advance()?;
        let control = if self.is_control_tick(self.marble.tick()) {
            let outcome = controller::control_tick(&self.marble, &self.pose, &self.setup.control, &self.setup.motion)?;
            self.pose = outcome.pose;
            Some(outcome)
        } else {
            None
        };
        Ok(Tick { sample, control })
    }
}

/// A run that stopped early, with everything logged up to the failure.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Setup(#[from] ScenarioError),
    #[error("run aborted at t = {at} s: {source}")]
    Aborted {
        at: f64,
        source: SimError,
        partial: Box<ExperimentTrace>,
    },
}

pub fn run_scenario(scenario: &Scenario) -> Result<ExperimentTrace, RunError> {
    run_scenario_with(scenario, false)
}

/// As [`run_scenario`], optionally keeping the full 10 ms stream.
pub fn run_scenario_with(scenario: &Scenario, record_raw: bool) -> Result<ExperimentTrace, RunError> {
    let mut sim = Simulation::new(scenario)?;
    let mut trace = ExperimentTrace::new(scenario.clone(), sim.pose());
    if record_raw {
        trace.raw = Some(vec![sim.current_sample()]);
    }
    while !sim.is_finished() {
        let tick = match sim.tick() {
            Ok(t) => t,
            Err(source) => {
                return Err(RunError::Aborted {
                    at: sim.time(),
                    source,
                    partial: Box::new(trace),
                })
            }
        };
        if let Some(raw) = trace.raw.as_mut() {
            raw.push(tick.sample);
        }
        if let Some(c) = tick.control {
            trace.push(c);
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::decide;
    use crate::lab::scenario::Overrides;
    use crate::robot::apply;

    #[test]
    fn control_cadence_and_consistency() {
        let s = Scenario::new("t", 20.0, 3);
        let trace = run_scenario_with(&s, true).unwrap();
        let times: Vec<f64> = trace.samples.iter().map(|x| x.t).collect();
        assert_eq!(times, vec![3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0, 17.0, 19.0]);
        assert_eq!(trace.poses.len(), trace.decisions.len() + 1);
        let cfg = s.control();
        for (i, (smp, d)) in trace.samples.iter().zip(&trace.decisions).enumerate() {
            assert_eq!(decide(smp.volts, &cfg).unwrap(), *d);
            assert_eq!(apply(&trace.poses[i], *d, &s.motion()), trace.poses[i + 1]);
        }
        let raw = trace.raw.unwrap();
        assert_eq!(raw.len(), 2001);
        assert_eq!(raw[300], trace.samples[0]);
    }

    #[test]
    fn duration_before_startup_gives_empty_trace() {
        let trace = run_scenario(&Scenario::new("t", 2.0, 3)).unwrap();
        assert!(trace.decisions.is_empty());
        assert_eq!(trace.poses.len(), 1);
    }

    #[test]
    fn non_oscillating_setup_is_rejected() {
        let bad = Scenario::new("t", 10.0, 1).with_overrides(Overrides {
            phi0: Some(0.2),
            ..Overrides::default()
        });
        assert!(matches!(run_scenario(&bad), Err(RunError::Setup(_))));
    }
}
