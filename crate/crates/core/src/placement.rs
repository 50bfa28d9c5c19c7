//! Naive geometric camera placement: the camera sits `d_t` along the feature
//! normal, looks back at the feature, and keeps its x-axis horizontal.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_between, unit, unit_vector_serde, GeometryError, Pose, UnitVector3};

/// Viewing directions closer than this to `±world_up` have no usable
/// horizontal x-axis.
pub const DEGENERATE_UP_ANGLE: f64 = 0.5 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("viewing direction within 0.5 deg of the world up axis")]
    DegenerateNormal,
    #[error("invalid placement config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Tracked feature frame. The surface normal is the frame's y-axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureState {
    pose: Pose,
}

impl FeatureState {
    pub fn new(pose: Pose) -> Self {
        Self { pose }
    }

    /// Builds a feature frame at `position` whose y-axis is `normal`. The
    /// x-axis is taken horizontal when possible.
    pub fn from_position_normal(
        position: Vector3<f64>,
        normal: Vector3<f64>,
        world_up: &UnitVector3,
    ) -> Result<Self, PlacementError> {
        let y = unit(&normal)?;
        let x = if y.dot(world_up).abs() < 1.0 - 1e-12 {
            unit(&world_up.cross(&y))?
        } else {
            unit(&y.cross(&Vector3::x()))?
        };
        let z = x.cross(&y);
        Ok(Self {
            pose: Pose::from_axes(x.into_inner(), y.into_inner(), z, position),
        })
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn translation(&self) -> &Vector3<f64> {
        self.pose.translation()
    }

    pub fn normal(&self) -> UnitVector3 {
        UnitVector3::new_unchecked(self.pose.y_axis())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementConfig {
    /// Desired feature-to-camera distance, meters.
    pub d_t: f64,
    #[serde(with = "unit_vector_serde")]
    pub world_up: UnitVector3,
    #[serde(with = "unit_vector_serde")]
    pub preferred_side_axis: UnitVector3,
    /// Radians.
    pub side_angle_limit: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self {
            d_t: 0.11,
            world_up: Vector3::z_axis(),
            preferred_side_axis: Vector3::x_axis(),
            side_angle_limit: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl PlacementConfig {
    pub fn validate(&self) -> Result<(), PlacementError> {
        if !(self.d_t > 0.0) || !self.d_t.is_finite() {
            return Err(PlacementError::InvalidConfig(format!("d_t must be positive, got {}", self.d_t)));
        }
        if !(self.side_angle_limit >= 0.0) {
            return Err(PlacementError::InvalidConfig("side_angle_limit must be non-negative".into()));
        }
        Ok(())
    }
}

/// Camera frame at `position` whose optical axis points at `target` and
/// whose x-axis is `unit(world_up x z_c)`.
pub fn look_at(position: &Vector3<f64>, target: &Vector3<f64>, world_up: &UnitVector3) -> Result<Pose, PlacementError> {
    let z = unit(&(target - position))?;
    let tilt = angle_between(&z, world_up)?;
    if !(DEGENERATE_UP_ANGLE..=std::f64::consts::PI - DEGENERATE_UP_ANGLE).contains(&tilt) {
        return Err(PlacementError::DegenerateNormal);
    }
    let x = unit(&world_up.cross(&z))?;
    let y = z.cross(&x);
    Ok(Pose::from_axes(x.into_inner(), y, z.into_inner(), *position))
}

/// As [`look_at`], but when the view is vertical the x-axis is taken from
/// `last_x` re-orthogonalized against the optical axis. Returns the pose
/// and whether the fallback was used.
pub fn look_at_with_fallback(
    position: &Vector3<f64>,
    target: &Vector3<f64>,
    world_up: &UnitVector3,
    last_x: &Vector3<f64>,
) -> Result<(Pose, bool), PlacementError> {
    match look_at(position, target, world_up) {
        Ok(pose) => Ok((pose, false)),
        Err(PlacementError::DegenerateNormal) => {
            let z = unit(&(target - position))?;
            let x = unit(&(last_x - z.into_inner() * last_x.dot(&z)))?;
            let y = z.cross(&x);
            Ok((Pose::from_axes(x.into_inner(), y, z.into_inner(), *position), true))
        }
        Err(e) => Err(e),
    }
}

pub fn naive_position(feature: &FeatureState, cfg: &PlacementConfig) -> Vector3<f64> {
    feature.translation() + feature.normal().into_inner() * cfg.d_t
}

pub fn compute_naive_pose(feature: &FeatureState, cfg: &PlacementConfig) -> Result<Pose, PlacementError> {
    cfg.validate()?;
    look_at(&naive_position(feature, cfg), feature.translation(), &cfg.world_up)
}

/// [`compute_naive_pose`] with the vertical-view fallback of
/// [`look_at_with_fallback`].
pub fn compute_naive_pose_with_fallback(
    feature: &FeatureState,
    cfg: &PlacementConfig,
    last_x: &Vector3<f64>,
) -> Result<(Pose, bool), PlacementError> {
    cfg.validate()?;
    look_at_with_fallback(&naive_position(feature, cfg), feature.translation(), &cfg.world_up, last_x)
}

/// True when the optical axis lies within `side_angle_limit` of the
/// preferred side axis.
pub fn check_orientation_side(camera_pose: &Pose, cfg: &PlacementConfig) -> bool {
    match angle_between(&camera_pose.z_axis(), &cfg.preferred_side_axis) {
        Ok(angle) => angle <= cfg.side_angle_limit,
        Err(_) => false,
    }
}
