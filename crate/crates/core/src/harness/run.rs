use std::path::{Path, PathBuf};

use crate::camera::{CameraConfig, StereoRig};
use crate::controller::ControllerState;
use crate::placement::PlacementConfig;

use super::log::{read_csv, write_csv, write_csv_string, LogRow};
use super::metrics::{metrics_from_poses, tick_poses};
use super::scenario::Scenario;
use super::summary::{summarize_records, Summary};
use super::HarnessError;

/// Everything a run produced, before anything is written.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub dof: usize,
    pub rows: Vec<LogRow>,
    pub summary: Summary,
}

impl Simulation {
    pub fn csv(&self) -> Result<String, HarnessError> {
        write_csv_string(&self.rows, self.dof)
    }
}

/// Drives the controller over the scenario trajectory, one tick per sample.
pub fn simulate(scenario: &Scenario) -> Result<Simulation, HarnessError> {
    let controller = &scenario.controller;
    let chain = &controller.chain;
    let stream = scenario.trajectory.generate(controller.config.rate_hz)?;
    let fk_err = |e: crate::kinematics::KinematicsError| HarnessError::Config(e.to_string());
    let mut state = ControllerState::at_rest(chain, scenario.initial_q.clone(), scenario.file.trajectory.rng_seed).map_err(fk_err)?;
    let tau = scenario.file.lag_tau;
    let alpha = if tau > 0.0 { 1.0 - (-controller.config.dt() / tau).exp() } else { 1.0 };
    let mut q_actual = scenario.initial_q.clone();
    let mut rows = Vec::with_capacity(stream.len());
    for sample in &stream {
        let (mut next, report) = controller.tick(&state, &sample.feature);
        if alpha == 1.0 {
            q_actual = report.q_command.clone();
        } else {
            q_actual += (&report.q_command - &q_actual) * alpha;
            next.q_current = q_actual.clone();
        }
        let camera = chain.forward_kinematics(&q_actual).map_err(fk_err)?;
        let poses = tick_poses(&report, sample.time, &camera, &sample.feature);
        let metrics = metrics_from_poses(&poses, &controller.placement, &scenario.rig);
        rows.push(LogRow {
            poses,
            q_command: report.q_command.iter().copied().collect(),
            objective: report.objective,
            newton_failure: report.newton_failure.map(str::to_string),
            safety_override: report.safety_override,
            used_fallback_x: report.used_fallback_x,
            solve_evaluations: report.solve_report.as_ref().map(|r| r.evaluations),
            termination: report.solve_report.as_ref().map(|r| r.termination.label().to_string()),
            metrics,
        });
        state = next;
    }
    let records: Vec<_> = rows.iter().map(|r| r.metrics).collect();
    Ok(Simulation { dof: chain.dof(), summary: summarize_records(&records), rows })
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub simulation: Simulation,
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
}

/// Simulates and writes the per-tick CSV and summary JSON into `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunOutput, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let simulation = simulate(scenario)?;
    let csv_path = out_dir.join(scenario.csv_name());
    let summary_path = out_dir.join(scenario.summary_name());
    write_csv(&csv_path, &simulation.rows, simulation.dof)?;
    write_summary(&summary_path, &simulation.summary)?;
    Ok(RunOutput { csv_path, summary_path, simulation })
}

/// Aggregates the metric columns stored in a log.
pub fn summarize(csv_path: &Path) -> Result<Summary, HarnessError> {
    let rows = read_csv(csv_path)?;
    let records: Vec<_> = rows.iter().map(|r| r.metrics).collect();
    Ok(summarize_records(&records))
}

/// Recomputes every metric from the logged poses, then aggregates. The
/// scenario supplies the desired distance and camera rig; defaults otherwise.
pub fn replay(csv_path: &Path, scenario: Option<&Scenario>) -> Result<Summary, HarnessError> {
    let rows = read_csv(csv_path)?;
    let (placement, rig): (PlacementConfig, StereoRig) = match scenario {
        Some(s) => (s.controller.placement.clone(), s.rig),
        None => (
            PlacementConfig::default(),
            CameraConfig::default().rig().map_err(|e| HarnessError::Config(e.to_string()))?,
        ),
    };
    let records: Vec<_> = rows.iter().map(|r| metrics_from_poses(&r.poses, &placement, &rig)).collect();
    Ok(summarize_records(&records))
}
