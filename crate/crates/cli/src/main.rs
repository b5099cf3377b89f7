//! `marblebot` command-line tool.
//!
//! ```text
//! marblebot run E1 --seed 7 --out t.csv   # run a scenario, write the trace
//! marblebot analyze t.csv                 # fit, tallies, histogram
//! marblebot serve --port 8765             # live session over WebSocket
//! marblebot scenarios                     # list builtins
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use marblebot_bridge::{serve, ServeConfig, DEFAULT_REALTIME_FACTOR};
use marblebot_core::lab::{
    builtin, builtins, fit_normal, histogram, read_trace_file, run_scenario_with, write_raw, write_trace, Scenario,
    DEFAULT_BIN_WIDTH,
};

/// Duration of the open-ended scenario `serve` plays when none is given, s.
const LIVE_DURATION: f64 = 86_400.0;

#[derive(Parser, Debug)]
#[command(
    name = "marblebot",
    version,
    about = "Chemical-oscillator robot controller simulator"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a builtin scenario (E1..E4) or a scenario file and write its trace
    Run {
        /// Builtin name or path to a .toml / .json scenario
        scenario: String,
        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario duration, seconds
        #[arg(long)]
        duration: Option<f64>,
        /// Trace CSV destination (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every 10 ms sample to this CSV
        #[arg(long)]
        raw_out: Option<PathBuf>,
    },
    /// Summarize a trace: Gaussian fit, decision tallies, histogram
    Analyze {
        trace: PathBuf,
        /// Histogram bin width, volts
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
        hist_width: f64,
    },
    /// Serve a live session on ws://HOST:PORT/ws
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        /// Simulated seconds per wall-clock second
        #[arg(long, default_value_t = DEFAULT_REALTIME_FACTOR)]
        realtime_factor: f64,
        /// Scenario to play; an open-ended unstimulated run if omitted
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the builtin scenarios
    Scenarios,
}

/// Errors the user can fix by changing the command line exit with 2.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn resolve(source: &str) -> Result<Scenario, Failure> {
    if let Some(s) = builtin(source) {
        return Ok(s);
    }
    let path = Path::new(source);
    if path.is_file() {
        return Scenario::load(path)
            .with_context(|| format!("loading scenario {}", path.display()))
            .map_err(Failure::Runtime);
    }
    let names: Vec<String> = builtins().into_iter().map(|s| s.name).collect();
    Err(Failure::Usage(format!(
        "unknown scenario {source:?}: expected one of {} or a scenario file",
        names.join(", ")
    )))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn run(
    source: &str,
    seed: Option<u64>,
    duration: Option<f64>,
    out: Option<&Path>,
    raw_out: Option<&Path>,
) -> Result<(), Failure> {
    let mut scenario = resolve(source)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(d) = duration {
        scenario.duration = d;
    }
    let trace = match run_scenario_with(&scenario, raw_out.is_some()) {
        Ok(t) => t,
        Err(e) => {
            return Err(Failure::Runtime(
                anyhow::Error::new(e).context(format!("running {}", scenario.name)),
            ))
        }
    };
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_trace(&trace, &mut w)
                .and_then(|_| w.flush())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_trace(&trace, &mut w)
                .and_then(|_| w.flush())
                .context("writing trace to stdout")?;
        }
    }
    if let (Some(path), Some(raw)) = (raw_out, trace.raw.as_deref()) {
        let mut w = create(path)?;
        write_raw(raw, &mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let tally = trace.tally();
    eprintln!(
        "{} seed {}: {} decisions (L {} R {} S {})",
        scenario.name,
        scenario.seed,
        trace.decisions.len(),
        tally.left,
        tally.right,
        tally.stay
    );
    Ok(())
}

// Writes a finished report; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err(anyhow::Error::new(e).context("writing to stdout").into())
        }
        _ => Ok(()),
    }
}

fn analyze(path: &Path, width: f64) -> Result<(), Failure> {
    let trace = read_trace_file(path).with_context(|| format!("reading {}", path.display()))?;
    let volts = trace.volts();
    let bins = if volts.is_empty() {
        Vec::new()
    } else {
        histogram(&volts, width).map_err(|e| Failure::Usage(format!("--hist-width: {e}")))?
    };
    let tally = trace.tally();
    let mut out = String::new();
    let _ = writeln!(out, "scenario   {} (seed {})", trace.scenario.name, trace.scenario.seed);
    let _ = writeln!(out, "decisions  {}", trace.decisions.len());
    let _ = writeln!(out, "  left     {}", tally.left);
    let _ = writeln!(out, "  right    {}", tally.right);
    let _ = writeln!(out, "  stay     {}", tally.stay);
    let _ = match tally.left_fraction() {
        Some(f) => writeln!(out, "  left fraction of moving  {f:.3}"),
        None => writeln!(out, "  left fraction of moving  n/a"),
    };
    let _ = match fit_normal(&volts) {
        Ok(fit) => writeln!(
            out,
            "fit        mean {:.5} V  std {:.5} V  n {}{}",
            fit.mean,
            fit.std,
            fit.n,
            if fit.degenerate { "  (constant data)" } else { "" }
        ),
        Err(e) => writeln!(out, "fit        {e}"),
    };
    if !bins.is_empty() {
        let peak = bins.iter().map(|b| b.count).max().unwrap_or(0).max(1);
        let _ = writeln!(out, "histogram  bin {:.1} mV", width * 1e3);
        for b in &bins {
            let bar = "#".repeat((b.count * 50).div_ceil(peak));
            let _ = writeln!(out, "  {:>8.1} mV {:>6}  {bar}", b.lower * 1e3, b.count);
        }
    }
    emit(&out)
}

fn serve_live(host: IpAddr, port: u16, factor: f64, source: Option<&str>, seed: Option<u64>) -> Result<(), Failure> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Failure::Usage(format!("--realtime-factor must be > 0, got {factor}")));
    }
    let mut scenario = match source {
        Some(s) => resolve(s)?,
        None => Scenario::new("live", LIVE_DURATION, 1),
    };
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async {
        let server = serve(ServeConfig {
            addr: SocketAddr::new(host, port),
            scenario,
            realtime_factor: factor,
        })
        .await
        .context("starting bridge")?;
        eprintln!("listening on ws://{}/ws (x{factor})", server.local_addr());
        tokio::signal::ctrl_c().await.context("waiting for ctrl-c")?;
        server.shutdown().await;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match &args.command {
        Command::Run {
            scenario,
            seed,
            duration,
            out,
            raw_out,
        } => run(scenario, *seed, *duration, out.as_deref(), raw_out.as_deref()),
        Command::Analyze { trace, hist_width } => analyze(trace, *hist_width),
        Command::Serve {
            port,
            host,
            realtime_factor,
            scenario,
            seed,
        } => serve_live(*host, *port, *realtime_factor, scenario.as_deref(), *seed),
        Command::Scenarios => {
            let mut out = String::new();
            for s in builtins() {
                let _ = writeln!(
                    out,
                    "{}  {:>4} s  seed {:<3} {} stimuli",
                    s.name,
                    s.duration,
                    s.seed,
                    s.stimuli.len()
                );
            }
            emit(&out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
