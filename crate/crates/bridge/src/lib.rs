//! Live bridge between a running simulation and WebSocket clients.
//!
//! Clients send [`SessionCommand`]s as JSON text frames (one per line) and
//! receive a [`Reply`] for each, plus the shared [`TelemetryEvent`] stream.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{events_from_trace, parse_command, Reply, SessionCommand, SessionState, TelemetryEvent};
pub use server::{serve, BridgeError, ServeConfig, Server};
pub use session::{Session, DEFAULT_REALTIME_FACTOR};
