//! Per-tick tracking metrics.

use crate::camera::{centroid_errors, CameraModel, CentroidErrors, Projection, StereoRig};
use crate::controller::{ConstraintSet, SolverUsed, TickReport};
use crate::geometry::{angle_between, Pose};
use crate::placement::{FeatureState, PlacementConfig};

/// The logged poses and tags a metrics record is derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct TickPoses {
    pub tick: u64,
    pub time: f64,
    pub feature: Pose,
    pub naive: Pose,
    pub commanded: Pose,
    /// Where the camera actually is; differs from `commanded` under lag.
    pub camera: Pose,
    pub constraints: ConstraintSet,
    pub solver: SolverUsed,
    pub loop_time_ms: f64,
}

/// Projection of the feature into one camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentroidSample {
    pub u: f64,
    pub v: f64,
    pub errors: CentroidErrors,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRecord {
    pub tick: u64,
    pub time: f64,
    /// Angle between the optical axis and the ray to the feature.
    pub vva_deg: f64,
    pub fd_mm: f64,
    /// Camera distance minus the desired distance.
    pub fd_signed_mm: f64,
    /// Tilt of the camera x-axis out of the horizontal plane.
    pub pf_deg: f64,
    pub an_deg: f64,
    pub pn_mm: f64,
    pub lt_ms: f64,
    pub constraints: ConstraintSet,
    pub solver: SolverUsed,
    /// `None` when the feature is outside that camera's image.
    pub left: Option<CentroidSample>,
    pub right: Option<CentroidSample>,
}

impl MetricsRecord {
    /// Whether any workspace or joint constraint shaped this tick.
    pub fn with_constraints(&self) -> bool {
        !self.constraints.is_empty() || self.solver == SolverUsed::Constrained
    }

    pub fn visible_any(&self) -> bool {
        self.left.is_some() || self.right.is_some()
    }
}

fn centroid(cam: &CameraModel, rig_pose: &Pose, feature: &Pose) -> Option<CentroidSample> {
    let p = cam.to_camera_frame(rig_pose, feature.translation());
    match cam.project(&p) {
        Projection::Pixel { u, v } if cam.in_frame(u, v) => Some(CentroidSample {
            u,
            v,
            errors: centroid_errors(cam, u, v),
        }),
        _ => None,
    }
}

pub fn metrics_from_poses(poses: &TickPoses, placement: &PlacementConfig, rig: &StereoRig) -> MetricsRecord {
    let cam = &poses.camera;
    let to_feature = poses.feature.translation() - cam.translation();
    let vva = angle_between(&cam.z_axis(), &to_feature).unwrap_or(0.0);
    let fd_signed = to_feature.norm() - placement.d_t;
    let tilt = angle_between(&cam.x_axis(), &placement.world_up).unwrap_or(std::f64::consts::FRAC_PI_2);
    MetricsRecord {
        tick: poses.tick,
        time: poses.time,
        vva_deg: vva.to_degrees(),
        fd_mm: 1e3 * fd_signed.abs(),
        fd_signed_mm: 1e3 * fd_signed,
        pf_deg: (90.0 - tilt.to_degrees()).abs(),
        an_deg: poses.naive.rotation_angle_to(&poses.commanded).to_degrees(),
        pn_mm: 1e3 * (poses.naive.translation() - poses.commanded.translation()).norm(),
        lt_ms: poses.loop_time_ms,
        constraints: poses.constraints,
        solver: poses.solver,
        left: centroid(&rig.left, cam, &poses.feature),
        right: centroid(&rig.right, cam, &poses.feature),
    }
}

/// Metrics of one controller tick. `camera` is the achieved camera pose.
pub fn compute_metrics(
    report: &TickReport,
    time: f64,
    camera: &Pose,
    feature: &FeatureState,
    placement: &PlacementConfig,
    rig: &StereoRig,
) -> MetricsRecord {
    metrics_from_poses(&tick_poses(report, time, camera, feature), placement, rig)
}

pub fn tick_poses(report: &TickReport, time: f64, camera: &Pose, feature: &FeatureState) -> TickPoses {
    TickPoses {
        tick: report.tick,
        time,
        feature: *feature.pose(),
        naive: report.naive_pose,
        commanded: report.commanded_pose,
        camera: *camera,
        constraints: report.constraints_hit,
        solver: report.solver_used,
        loop_time_ms: 1e3 * report.loop_time,
    }
}
