//! Scenario runner: synthetic feature trajectories, scenario loading, per-tick
//! metrics, the CSV log and summary statistics.

pub mod calibrate;
pub mod log;
pub mod metrics;
pub mod run;
pub mod scenario;
pub mod summary;
pub mod trajectory;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use calibrate::{calibrate, load_paired_points, CalibrationReport, PairedPoints};
pub use log::{read_csv, write_csv, write_csv_string, LogRow, LOOP_TIME_COLUMN};
pub use metrics::{compute_metrics, metrics_from_poses, CentroidSample, MetricsRecord, TickPoses};
pub use run::{read_summary, replay, run_scenario, simulate, summarize, write_summary, RunOutput, Simulation};
pub use scenario::{Scenario, ScenarioFile, SCENARIO_SCHEMA_VERSION};
pub use summary::{summarize_records, Split, Stat, Summary, Visibility};
pub use trajectory::{generate_trajectory, CurveSpec, NormalMode, SpeedProfile, TimedFeature, Trajectory, TrajectorySpec, TremorSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        HarnessError::Csv { path: path.to_path_buf(), source }
    }
}
