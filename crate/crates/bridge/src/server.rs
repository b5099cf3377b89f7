//! WebSocket server. A dedicated thread owns the [`Session`] and paces it
//! against the wall clock; socket tasks forward commands to it and relay
//! the broadcast event stream.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use marblebot_core::lab::Scenario;
use marblebot_core::marble::SAMPLES_PER_SECOND;
use thiserror::Error;
use tokio::sync::{broadcast, oneshot};
use tokio::task::JoinHandle;

use crate::protocol::{parse_command, Reply, SessionCommand, SessionState, TelemetryEvent};
use crate::session::Session;

/// Events buffered per subscriber before it counts as lagging.
pub const EVENT_BUFFER: usize = 8192;

// Wall-clock slack tolerated before the clock re-anchors instead of catching up.
const MAX_BACKLOG: Duration = Duration::from_millis(500);
const IDLE_POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Scenario(#[from] marblebot_core::lab::ScenarioError),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub scenario: Scenario,
    pub realtime_factor: f64,
}

struct Envelope {
    command: SessionCommand,
    reply: oneshot::Sender<Reply>,
}

#[derive(Debug, Clone, Copy)]
struct Snapshot {
    t: f64,
    state: SessionState,
    speed: f64,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<Envelope>,
    events: broadcast::Sender<(f64, Arc<str>)>,
    snapshot: Arc<Mutex<Snapshot>>,
}

/// A running server. Dropping it leaves the server running until the
/// runtime shuts down; call [`Server::shutdown`] to stop it.
pub struct Server {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    http: JoinHandle<()>,
    clock: Option<thread::JoinHandle<()>>,
}

impl Server {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Waits until the HTTP task ends, which only happens on shutdown.
    pub async fn wait(mut self) {
        let _ = (&mut self.http).await;
    }

    pub async fn shutdown(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        self.http.abort();
        let _ = (&mut self.http).await;
        if let Some(clock) = self.clock.take() {
            let _ = tokio::task::spawn_blocking(move || clock.join()).await;
        }
    }
}

/// Binds `config.addr` and starts serving `GET /ws`. Fails immediately if the
/// port is taken.
pub async fn serve(config: ServeConfig) -> Result<Server, BridgeError> {
    let session = Session::new(config.scenario, config.realtime_factor)?;
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|source| BridgeError::Bind {
            addr: config.addr,
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| BridgeError::Bind {
        addr: config.addr,
        source,
    })?;

    let (cmd_tx, cmd_rx) = mpsc::channel();
    let (events, _) = broadcast::channel(EVENT_BUFFER);
    let snapshot = Arc::new(Mutex::new(Snapshot {
        t: session.time(),
        state: session.state(),
        speed: session.speed(),
    }));
    let stop = Arc::new(AtomicBool::new(false));

    let clock = {
        let events = events.clone();
        let snapshot = snapshot.clone();
        let stop = stop.clone();
        thread::Builder::new()
            .name("marblebot-clock".into())
            .spawn(move || run_clock(session, cmd_rx, events, snapshot, stop))
            .expect("spawn clock thread")
    };

    let app = Router::new()
        .route("/", get(|| async { "marblebot bridge: open a WebSocket on /ws\n" }))
        .route("/ws", get(upgrade))
        .with_state(AppState {
            commands: cmd_tx,
            events,
            snapshot,
        });
    let http = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });

    Ok(Server {
        addr,
        stop,
        http,
        clock: Some(clock),
    })
}

fn run_clock(
    mut session: Session,
    commands: mpsc::Receiver<Envelope>,
    events: broadcast::Sender<(f64, Arc<str>)>,
    snapshot: Arc<Mutex<Snapshot>>,
    stop: Arc<AtomicBool>,
) {
    let mut anchor = (Instant::now(), session.tick_count());
    while !stop.load(Ordering::Relaxed) {
        let was_running = session.is_running();
        let speed = session.speed();
        let tick_before = session.tick_count();

        match commands.recv_timeout(IDLE_POLL) {
            Ok(env) => {
                let reply = session.apply_command(&env.command);
                let _ = env.reply.send(reply);
                while let Ok(env) = commands.try_recv() {
                    let reply = session.apply_command(&env.command);
                    let _ = env.reply.send(reply);
                }
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {}
            Err(mpsc::RecvTimeoutError::Disconnected) => break,
        }

        let now = Instant::now();
        let restarted = session.tick_count() < tick_before;
        if restarted || session.speed() != speed || session.is_running() != was_running {
            anchor = (now, session.tick_count());
        }

        if session.is_running() {
            let elapsed = now.duration_since(anchor.0);
            let due = anchor.1 + (elapsed.as_secs_f64() * session.speed() * SAMPLES_PER_SECOND as f64) as u64;
            while session.is_running() && session.tick_count() < due {
                if session.tick().is_err() {
                    break;
                }
                if anchor_is_stale(anchor, session.speed(), session.tick_count(), now) {
                    anchor = (now, session.tick_count());
                    break;
                }
            }
        }

        for event in session.take_events() {
            let _ = events.send((event.t(), Arc::from(event.to_json())));
        }
        if let Ok(mut s) = snapshot.lock() {
            *s = Snapshot {
                t: session.time(),
                state: session.state(),
                speed: session.speed(),
            };
        }
    }
}

// True once the remaining backlog would take longer than MAX_BACKLOG to clear.
fn anchor_is_stale(anchor: (Instant, u64), speed: f64, tick: u64, now: Instant) -> bool {
    let done = (tick - anchor.1) as f64 / (speed * SAMPLES_PER_SECOND as f64);
    now.duration_since(anchor.0).as_secs_f64() - done > MAX_BACKLOG.as_secs_f64()
}

async fn upgrade(ws: WebSocketUpgrade, State(app): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, app))
}

async fn client(socket: WebSocket, app: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut events = app.events.subscribe();
    let hello = app.snapshot.lock().map(|s| *s).ok();
    let mut last_t = 0.0;
    if let Some(s) = hello {
        last_t = s.t;
        let status = TelemetryEvent::Status {
            t: s.t,
            state: s.state,
            speed: s.speed,
            detail: Some("connected".into()),
        };
        if sink.send(Message::Text(status.to_json().into())).await.is_err() {
            return;
        }
    }

    loop {
        tokio::select! {
            event = events.recv() => match event {
                Ok((t, text)) => {
                    last_t = t;
                    if sink.send(Message::Text(text.as_ref().into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(missed)) => {
                    let status = TelemetryEvent::Status {
                        t: last_t,
                        state: SessionState::Dropped,
                        speed: 0.0,
                        detail: Some(format!("subscriber fell {missed} events behind")),
                    };
                    let _ = sink.send(Message::Text(status.to_json().into())).await;
                    let _ = sink.close().await;
                    break;
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            msg = stream.next() => match msg {
                Some(Ok(Message::Text(text))) => {
                    for line in text.as_str().lines().map(str::trim).filter(|l| !l.is_empty()) {
                        let reply = dispatch(&app, line).await;
                        if sink.send(Message::Text(reply.to_json().into())).await.is_err() {
                            return;
                        }
                    }
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn dispatch(app: &AppState, line: &str) -> Reply {
    let command = match parse_command(line) {
        Ok(c) => c,
        Err(reason) => return Reply::rejected(None, reason),
    };
    let name = command.name();
    let (tx, rx) = oneshot::channel();
    if app.commands.send(Envelope { command, reply: tx }).is_err() {
        return Reply::rejected(Some(name), "session clock has stopped");
    }
    rx.await
        .unwrap_or_else(|_| Reply::rejected(Some(name), "session clock has stopped"))
}
