//! A live session: one simulation, a command queue applied at tick
//! boundaries, and the events each tick produces. No pacing here; the
//! server drives [`Session::tick`] against the wall clock, tests drive it
//! directly.

use marblebot_core::lab::{Scenario, ScenarioError, SimError, Simulation};
use marblebot_core::LaserStimulus;

use crate::protocol::{Reply, SessionCommand, SessionState, TelemetryEvent};

/// Default multiple of real time the server plays at.
pub const DEFAULT_REALTIME_FACTOR: f64 = 10.0;

#[derive(Debug)]
pub struct Session {
    scenario: Scenario,
    sim: Simulation,
    state: SessionState,
    speed: f64,
    queued: Vec<LaserStimulus>,
    announced: usize,
    outbox: Vec<TelemetryEvent>,
}

impl Session {
    pub fn new(scenario: Scenario, speed: f64) -> Result<Self, ScenarioError> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(ScenarioError::Invalid(format!("realtime factor {speed} must be > 0")));
        }
        let sim = Simulation::new(&scenario)?;
        let mut s = Self {
            scenario,
            sim,
            state: SessionState::Running,
            speed,
            queued: Vec::new(),
            announced: 0,
            outbox: Vec::new(),
        };
        s.start(SessionState::Running);
        Ok(s)
    }

    fn start(&mut self, state: SessionState) {
        self.status(state, None);
        self.state = SessionState::Running;
        self.outbox.push(TelemetryEvent::sample(&self.sim.current_sample()));
        self.announce_stimuli(self.sim.time());
    }

    fn status(&mut self, state: SessionState, detail: Option<String>) {
        self.outbox.push(TelemetryEvent::Status {
            t: self.sim.time(),
            state,
            speed: self.speed,
            detail,
        });
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.sim.time()
    }

    pub fn tick_count(&self) -> u64 {
        self.sim.marble().tick()
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Whether [`tick`](Self::tick) would advance the clock.
    pub fn is_running(&self) -> bool {
        self.state == SessionState::Running
    }

    /// Validates and queues a command. Laser pulses start at the next tick
    /// boundary, which is the `apply_at` of the acknowledgement.
    pub fn apply_command(&mut self, cmd: &SessionCommand) -> Reply {
        let name = cmd.name();
        let now = self.sim.time();
        let ack = |apply_at: f64| Reply::Ack {
            command: name.to_owned(),
            apply_at,
        };
        let ended = matches!(self.state, SessionState::Finished | SessionState::Failed);
        match cmd {
            SessionCommand::FireLaser {
                duration_s,
                amplitude,
                mode,
            } => {
                if ended {
                    return Reply::rejected(Some(name), "session has ended; reset first");
                }
                match LaserStimulus::new(now, *duration_s, *amplitude, *mode) {
                    Ok(s) => {
                        self.queued.push(s);
                        ack(now)
                    }
                    Err(e) => Reply::rejected(Some(name), e.to_string()),
                }
            }
            SessionCommand::Pause | SessionCommand::Resume if ended => {
                Reply::rejected(Some(name), "session has ended; reset first")
            }
            SessionCommand::Pause => {
                if self.state != SessionState::Paused {
                    self.state = SessionState::Paused;
                    self.status(SessionState::Paused, None);
                }
                ack(now)
            }
            SessionCommand::Resume => {
                if self.state != SessionState::Running {
                    self.state = SessionState::Running;
                    self.status(SessionState::Running, None);
                }
                ack(now)
            }
            SessionCommand::Reset => match Simulation::new(&self.scenario) {
                Ok(sim) => {
                    self.sim = sim;
                    self.queued.clear();
                    self.announced = 0;
                    self.start(SessionState::Reset);
                    ack(0.0)
                }
                Err(e) => Reply::rejected(Some(name), e.to_string()),
            },
            SessionCommand::SetSpeed { factor } => {
                if factor.is_finite() && *factor > 0.0 {
                    self.speed = *factor;
                    let state = self.state;
                    self.status(state, Some(format!("speed {factor}")));
                    ack(now)
                } else {
                    Reply::rejected(Some(name), format!("realtime factor {factor} must be > 0"))
                }
            }
        }
    }

    // Emits a stimulus event for every scheduled pulse that starts before `until`.
    fn announce_stimuli(&mut self, until: f64) {
        let schedule = self.sim.marble().schedule();
        let mut fresh: Vec<LaserStimulus> = schedule.iter().filter(|s| s.t_on <= until).copied().collect();
        fresh.sort_by(|a, b| a.t_on.total_cmp(&b.t_on));
        for s in fresh.iter().skip(self.announced) {
            self.outbox.push(TelemetryEvent::stimulus(s));
        }
        self.announced = self.announced.max(fresh.len());
    }

    /// Advances one 10 ms tick if running. Queued pulses are scheduled first.
    pub fn tick(&mut self) -> Result<(), SimError> {
        if !self.is_running() {
            return Ok(());
        }
        for s in std::mem::take(&mut self.queued) {
            self.sim.schedule_laser(s)?;
        }
        let a = self.sim.time();
        // Pulses starting inside [a, next) act during this tick.
        let b = self.sim.next_tick_time();
        self.announce_stimuli(a.max(b - 1e-9));
        match self.sim.tick() {
            Ok(tick) => {
                self.outbox.push(TelemetryEvent::sample(&tick.sample));
                if let Some(c) = tick.control {
                    self.outbox.push(TelemetryEvent::decision(&c.sample, c.decision));
                    self.outbox.push(TelemetryEvent::pose(c.sample.t, &c.pose));
                }
                if self.sim.is_finished() {
                    self.state = SessionState::Finished;
                    self.status(SessionState::Finished, None);
                }
                Ok(())
            }
            Err(e) => {
                self.state = SessionState::Failed;
                self.status(SessionState::Failed, Some(e.to_string()));
                Err(e)
            }
        }
    }

    pub fn take_events(&mut self) -> Vec<TelemetryEvent> {
        std::mem::take(&mut self.outbox)
    }

    /// Plays the scenario to its end without pacing and returns every event.
    pub fn run_headless(scenario: Scenario) -> Result<Vec<TelemetryEvent>, ScenarioError> {
        let mut session = Session::new(scenario, DEFAULT_REALTIME_FACTOR)?;
        let mut events = session.take_events();
        while session.is_running() {
            if session.tick().is_err() {
                break;
            }
            events.extend(session.take_events());
        }
        events.extend(session.take_events());
        Ok(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use marblebot_core::StimulusMode;

    fn session() -> Session {
        Session::new(Scenario::new("live", 30.0, 2), 10.0).unwrap()
    }

    fn fire(amplitude: f64) -> SessionCommand {
        SessionCommand::FireLaser {
            duration_s: 10.0,
            amplitude,
            mode: StimulusMode::Inhibit,
        }
    }

    #[test]
    fn set_speed_zero_rejected() {
        let mut s = session();
        assert!(matches!(
            s.apply_command(&SessionCommand::SetSpeed { factor: 0.0 }),
            Reply::Rejected { .. }
        ));
        assert!(matches!(
            s.apply_command(&SessionCommand::SetSpeed { factor: 2.0 }),
            Reply::Ack { .. }
        ));
        assert_eq!(s.speed(), 2.0);
    }

    #[test]
    fn invalid_laser_rejected_with_reason() {
        let mut s = session();
        match s.apply_command(&fire(-1.0)) {
            Reply::Rejected { reason, command } => {
                assert!(reason.contains("amplitude"));
                assert_eq!(command.as_deref(), Some("fire_laser"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn laser_applies_at_next_tick() {
        let mut s = session();
        for _ in 0..100 {
            s.tick().unwrap();
        }
        s.take_events();
        let reply = s.apply_command(&fire(0.2));
        assert_eq!(
            reply,
            Reply::Ack {
                command: "fire_laser".into(),
                apply_at: 1.0
            }
        );
        s.tick().unwrap();
        let events = s.take_events();
        assert!(matches!(events[0], TelemetryEvent::Stimulus { t, .. } if t == 1.0));
        assert!(matches!(events[1], TelemetryEvent::Sample { laser_on: true, .. }));
    }

    #[test]
    fn two_pulses_in_one_tick_both_scheduled() {
        let mut s = session();
        s.apply_command(&fire(0.2));
        s.apply_command(&fire(0.1));
        s.tick().unwrap();
        let stimuli = s
            .take_events()
            .into_iter()
            .filter(|e| matches!(e, TelemetryEvent::Stimulus { .. }))
            .count();
        assert_eq!(stimuli, 2);
    }

    #[test]
    fn pause_stops_the_clock() {
        let mut s = session();
        s.tick().unwrap();
        s.apply_command(&SessionCommand::Pause);
        s.take_events();
        for _ in 0..10 {
            s.tick().unwrap();
        }
        assert!(s.take_events().is_empty());
        assert_eq!(s.time(), 0.01);
        s.apply_command(&SessionCommand::Resume);
        s.tick().unwrap();
        assert_eq!(s.time(), 0.02);
    }

    #[test]
    fn reset_restarts_from_zero() {
        let mut s = session();
        let first = s.take_events();
        for _ in 0..250 {
            s.tick().unwrap();
        }
        s.take_events();
        assert!(matches!(s.apply_command(&SessionCommand::Reset), Reply::Ack { apply_at, .. } if apply_at == 0.0));
        let after = s.take_events();
        assert!(matches!(after[0], TelemetryEvent::Status { t, state: SessionState::Reset, .. } if t == 0.0));
        assert_eq!(after[1], first[1]);
    }

    #[test]
    fn events_are_time_ordered() {
        let events = Session::run_headless(
            Scenario::new("x", 30.0, 1).with_stimulus(LaserStimulus::inhibit(10.0, 10.0, 0.2).unwrap()),
        )
        .unwrap();
        assert!(events.windows(2).all(|w| w[1].t() >= w[0].t()));
        assert!(matches!(
            events.last(),
            Some(TelemetryEvent::Status {
                state: SessionState::Finished,
                ..
            })
        ));
        assert_eq!(
            events
                .iter()
                .filter(|e| matches!(e, TelemetryEvent::Stimulus { .. }))
                .count(),
            1
        );
    }
}
