//! Scenario runner for the safedrive controllers: a multi-rate simulation
//! loop with measurement delay, run metrics (tracking error, obstacle
//! distance, time-to-zone, QP solve time), CSV/JSON/SVG exports and the
//! `safedrive` command line.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod cli;
pub mod delay;
pub mod export;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod training;

pub use delay::DelayLine;
pub use export::{export_run, MetricsReport};
pub use metrics::{compute_ttz, min_distance, Metrics};
pub use scenario::{load_scenario, parse_scenario, ScenarioConfig};
pub use sim::{compute_metrics, run_scenario, LogRow, RunOutput, TrajectoryLog};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("simulation: {0}")]
    Simulation(String),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error(transparent)]
    Cdob(#[from] safedrive_core::cdob::CdobError),
    #[error(transparent)]
    Hocbf(#[from] safedrive_core::hocbf::HoError),
    #[error(transparent)]
    ClfCbf(#[from] safedrive_core::clf_cbf::ClfCbfError),
    #[error(transparent)]
    Numerics(#[from] safedrive_core::numerics::NumericsError),
    #[error(transparent)]
    Path(#[from] safedrive_core::path::PathError),
    #[error(transparent)]
    Drl(#[from] safedrive_drl::DrlError),
}

impl HarnessError {
    pub(crate) fn io_csv(path: &Path, e: csv::Error) -> Self {
        Self::Csv { path: path.to_path_buf(), message: e.to_string() }
    }
}
