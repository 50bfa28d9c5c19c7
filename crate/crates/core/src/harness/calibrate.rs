//! Arm-to-arm registration from paired touch points.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{register_paired_points, register_paired_points_l1, Pose};

/// `a[i]` and `b[i]` are the same physical point seen from two frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedPoints {
    pub a: Vec<[f64; 3]>,
    pub b: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub pairs: usize,
    pub method: &'static str,
    /// Maps `a` points into the `b` frame; rotation row-major, then translation.
    pub transform: Pose,
    pub mean_abs_error: f64,
    pub rms_error: f64,
    pub max_error: f64,
}

/// Reads `{"a": [...], "b": [...]}` JSON, or CSV with columns
/// `ax,ay,az,bx,by,bz` when the extension is not `.json`.
pub fn load_paired_points(path: &Path) -> Result<PairedPoints, HarnessError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        return serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source });
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let mut points = PairedPoints { a: vec![], b: vec![] };
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| HarnessError::csv(path, e))?;
        let v: Vec<f64> = row
            .iter()
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| HarnessError::Parse { path: path.to_path_buf(), message: format!("line {}: not a number", k + 2) })?;
        if v.len() != 6 {
            return Err(HarnessError::Parse { path: path.to_path_buf(), message: format!("line {}: expected 6 columns", k + 2) });
        }
        points.a.push([v[0], v[1], v[2]]);
        points.b.push([v[3], v[4], v[5]]);
    }
    Ok(points)
}

pub fn calibrate(points: &PairedPoints, l1_iterations: Option<usize>) -> Result<CalibrationReport, HarnessError> {
    let a: Vec<Vector3<f64>> = points.a.iter().map(|p| Vector3::from(*p)).collect();
    let b: Vec<Vector3<f64>> = points.b.iter().map(|p| Vector3::from(*p)).collect();
    let (reg, method) = match l1_iterations {
        None => (register_paired_points(&a, &b), "least-squares"),
        Some(n) => (register_paired_points_l1(&a, &b, n), "least-squares+irls"),
    };
    let reg = reg.map_err(|e| HarnessError::Config(format!("registration: {e}")))?;
    Ok(CalibrationReport {
        pairs: a.len(),
        method,
        transform: reg.transform,
        mean_abs_error: reg.mean_abs_error,
        rms_error: reg.rms_error,
        max_error: reg.max_error,
    })
}
