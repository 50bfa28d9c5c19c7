//! Scenario files.
//!
//! A scenario is a JSON document with `schema_version` 1. Relative paths in
//! it resolve against the directory containing the file. Every section but
//! `name`, `trajectory` and the version has a default:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "circle",
//!   "chain": "my_chain.json",
//!   "initial_q": [0.0, 0.115, 0.1787, 1.5708, -0.9004, 0.0],
//!   "zone": {"points": [[...], [...], [...], [...], [...]]},
//!   "floor": {"height": 0.0},
//!   "placement": {"d_t": 0.11},
//!   "solver": {"max_evals": 50},
//!   "controller": {"rate_hz": 100},
//!   "camera": {"baseline": 0.015},
//!   "trajectory": {"kind": "circle", "center": [0, 0, 0.06], "radius": 0.03,
//!                  "axis": [1, 0, 0], "period": 30, "duration": 60},
//!   "lag_tau": 0.0,
//!   "output": {"csv": "circle.csv", "summary": "circle_summary.json"}
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trajectory::{Trajectory, TrajectorySpec};
use super::HarnessError;
use crate::camera::{CameraConfig, StereoRig};
use crate::controller::{Controller, ControllerConfig};
use crate::kinematics::{JointVector, KinematicChain};
use crate::optimizer::SolverConfig;
use crate::placement::PlacementConfig;
use crate::workspace::{Floor, Workspace, ZoneSpec};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<String>,
    pub summary: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    /// Chain definition; the bundled default chain when absent.
    #[serde(default)]
    pub chain: Option<String>,
    /// Starting joints; the chain's home when absent.
    #[serde(default)]
    pub initial_q: Option<Vec<f64>>,
    #[serde(default)]
    pub zone: Option<ZoneSpec>,
    #[serde(default)]
    pub floor: Option<Floor>,
    #[serde(default)]
    pub placement: PlacementConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub camera: CameraConfig,
    pub trajectory: TrajectorySpec,
    /// Time constant of a first-order lag between command and achieved
    /// joints, seconds. 0 means the command is reached within the tick.
    #[serde(default)]
    pub lag_tau: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A validated scenario with every referenced file loaded.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub base_dir: PathBuf,
    pub controller: Controller,
    pub trajectory: Trajectory,
    pub rig: StereoRig,
    pub initial_q: JointVector,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::load_with_seed(path, None)
    }

    /// Loads `path`, replacing the trajectory seed when `seed` is given.
    pub fn load_with_seed(path: &Path, seed: Option<u64>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut file: ScenarioFile = serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
        if let Some(seed) = seed {
            file.trajectory.rng_seed = seed;
        }
        let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Self::from_file(file, &base).map_err(|e| match e {
            HarnessError::Config(message) => HarnessError::Parse { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn from_file(file: ScenarioFile, base_dir: &Path) -> Result<Self, HarnessError> {
        if file.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {} (expected {SCENARIO_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let chain = match &file.chain {
            None => KinematicChain::default_rcm(),
            Some(rel) => {
                let path = base_dir.join(rel);
                let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                KinematicChain::from_json(&text).map_err(|e| HarnessError::Parse { path, message: e.to_string() })?
            }
        };
        let config = |what: &str, e: String| HarnessError::Config(format!("{what}: {e}"));
        file.placement.validate().map_err(|e| config("placement", e.to_string()))?;
        file.solver.validate().map_err(|e| config("solver", e.to_string()))?;
        file.controller.validate().map_err(|e| config("controller", e))?;
        if !(file.lag_tau >= 0.0) || !file.lag_tau.is_finite() {
            return Err(HarnessError::Config("lag_tau must be a non-negative number".into()));
        }
        let zone = file.zone.as_ref().map(ZoneSpec::build).transpose().map_err(|e| config("zone", e.to_string()))?;
        let rig = file.camera.rig().map_err(|e| config("camera", e.to_string()))?;
        let initial_q = match &file.initial_q {
            None => chain.home().clone(),
            Some(q) => {
                let q = JointVector::from_row_slice(q);
                chain.check_dimension(&q).map_err(|e| config("initial_q", e.to_string()))?;
                if !chain.within_joint_limits(&q).unwrap_or(false) {
                    return Err(config("initial_q", "outside the joint limits".into()));
                }
                q
            }
        };
        let trajectory = Trajectory::new(&file.trajectory, base_dir, file.placement.world_up)?;
        let controller = Controller {
            chain,
            workspace: Workspace { zone, floor: file.floor },
            placement: file.placement.clone(),
            solver: file.solver.clone(),
            config: file.controller.clone(),
        };
        Ok(Self {
            base_dir: base_dir.to_path_buf(),
            controller,
            trajectory,
            rig,
            initial_q,
            file,
        })
    }

    pub fn csv_name(&self) -> String {
        self.file.output.csv.clone().unwrap_or_else(|| format!("{}.csv", self.file.name))
    }

    pub fn summary_name(&self) -> String {
        self.file.output.summary.clone().unwrap_or_else(|| format!("{}_summary.json", self.file.name))
    }
}
