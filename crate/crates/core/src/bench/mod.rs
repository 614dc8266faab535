//! Replicated simulation experiments: scenario generation, selection and
//! estimation metrics, and a deterministic parallel runner.

mod metrics;
mod runner;
mod scenario;

pub use metrics::{metrics, Metrics, MetricsReport, Summary};
pub use runner::{run_scenario, run_scenario_with_noise, write_records_csv, Method, ReplicateRecord, ScenarioRun, CSV_HEADER};
pub use scenario::{
    generate_design, generate_noise, generate_signal, replicate_rng, Design, NoiseFamily, Placement, ScenarioSpec,
    SignalAmp,
};
