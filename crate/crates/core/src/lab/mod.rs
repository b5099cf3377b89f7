//! Experiment harness: scenarios, the clocked simulation, trace
//! persistence and the analyses run on traces.

mod builtins;
mod response;
mod scenario;
mod sim;
mod stats;
mod trace;

pub use builtins::{builtin, builtin_names, builtins};
pub use response::{
    characterize_response, characterize_samples, monotone_excursion, ResponseClass, ResponseError, ResponseReport,
    INHIBITION_RATIO, LEVEL_SHIFT_FRACTION,
};
pub use scenario::{Overrides, Scenario, ScenarioError, Setup};
pub use sim::{run_scenario, run_scenario_with, RunError, SimError, Simulation, Tick};
pub use stats::{
    fit_normal, histogram, Bin, GaussianFit, StatsError, DEFAULT_BIN_WIDTH, REFERENCE_MEAN, REFERENCE_STD,
};
pub use trace::{
    read_trace, read_trace_file, trace_to_string, write_raw, write_trace, write_trace_file, DecisionTally,
    ExperimentTrace, TraceError, HEADER, RAW_HEADER,
};
