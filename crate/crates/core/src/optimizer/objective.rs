use nalgebra::{DVector, Matrix3, Vector3};
use serde::Serialize;

use super::{OptimizerError, SolverConfig};
use crate::geometry::UnitVector3;
use crate::kinematics::{JointVector, KinematicChain};
use crate::placement::FeatureState;

/// Below this camera-to-feature distance the viewing direction is undefined.
const MIN_VIEW_DISTANCE: f64 = 1e-12;

pub fn huber(x: f64, delta: f64) -> Result<f64, OptimizerError> {
    if !(delta > 0.0) {
        return Err(OptimizerError::NonPositiveDelta(delta));
    }
    Ok(huber_unchecked(x, delta))
}

pub fn huber_derivative(x: f64, delta: f64) -> Result<f64, OptimizerError> {
    if !(delta > 0.0) {
        return Err(OptimizerError::NonPositiveDelta(delta));
    }
    Ok(huber_slope(x, delta))
}

fn huber_unchecked(x: f64, delta: f64) -> f64 {
    let a = x.abs();
    if a <= delta {
        0.5 * x * x
    } else {
        delta * (a - 0.5 * delta)
    }
}

fn huber_slope(x: f64, delta: f64) -> f64 {
    if x.abs() <= delta {
        x
    } else {
        delta * x.signum()
    }
}

/// Curvature used for the Gauss-Newton model of a Huber term.
fn huber_weight(x: f64, delta: f64) -> f64 {
    if x.abs() <= delta {
        1.0
    } else {
        delta / x.abs()
    }
}

/// Distance between the camera position at `q` and `target_translation`.
pub fn cost_position(q: &JointVector, chain: &KinematicChain, target_translation: &Vector3<f64>) -> Result<f64, OptimizerError> {
    let pose = chain.forward_kinematics(q)?;
    Ok((pose.translation() - target_translation).norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrientationCost {
    /// `w4 * c_v / 2 + w5 * c_per`.
    pub c_or: f64,
    /// `1 - cos` of the angle between the optical axis and the direction to
    /// the feature, in [0, 2].
    pub c_v: f64,
    /// `|cos|` of the angle between the camera x-axis and world up, in [0, 1].
    pub c_per: f64,
}

pub fn cost_orientation(
    q: &JointVector,
    chain: &KinematicChain,
    feature: &FeatureState,
    world_up: &UnitVector3,
    w4: f64,
    w5: f64,
) -> Result<OrientationCost, OptimizerError> {
    let pose = chain.forward_kinematics(q)?;
    let to_feature = feature.translation() - pose.translation();
    let r = to_feature.norm();
    if !(r > MIN_VIEW_DISTANCE) {
        return Err(OptimizerError::CoincidentOrigins);
    }
    let c = to_feature / r;
    let c_v = 1.0 - pose.z_axis().dot(&c).clamp(-1.0, 1.0);
    let c_per = pose.x_axis().dot(world_up).clamp(-1.0, 1.0).abs();
    Ok(OrientationCost {
        c_or: w4 * 0.5 * c_v + w5 * c_per,
        c_v,
        c_per,
    })
}

/// Signed: positive when the camera is farther than `d_t`.
pub fn cost_distance(q: &JointVector, chain: &KinematicChain, feature: &FeatureState, d_t: f64) -> Result<f64, OptimizerError> {
    let pose = chain.forward_kinematics(q)?;
    Ok((feature.translation() - pose.translation()).norm() - d_t)
}

/// Everything the objective depends on besides `q`.
#[derive(Clone, Debug)]
pub struct ObjectiveContext<'a> {
    pub chain: &'a KinematicChain,
    pub feature: &'a FeatureState,
    /// Desired camera position.
    pub target: Vector3<f64>,
    pub world_up: UnitVector3,
    pub config: &'a SolverConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    pub c_ps: f64,
    pub c_or: f64,
    pub c_v: f64,
    pub c_per: f64,
    pub c_d: f64,
    pub total: f64,
}

impl ObjectiveBreakdown {
    pub fn from_components(c_ps: f64, orientation: OrientationCost, c_d: f64, cfg: &SolverConfig) -> Self {
        let total = cfg.w1 * huber_unchecked(c_ps, cfg.delta1)
            + cfg.w2 * huber_unchecked(orientation.c_or, cfg.delta2)
            + cfg.w3 * huber_unchecked(c_d, cfg.delta3);
        Self {
            c_ps,
            c_or: orientation.c_or,
            c_v: orientation.c_v,
            c_per: orientation.c_per,
            c_d,
            total,
        }
    }
}

/// Objective value and gradient, with the gradient of each weighted Huber
/// term's residual for building Gauss-Newton curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveGradient {
    pub breakdown: ObjectiveBreakdown,
    pub gradient: DVector<f64>,
    /// Residual gradients of the position, orientation and distance terms.
    pub residual_gradients: [DVector<f64>; 3],
    /// `w_k * h''` for each term.
    pub curvature_weights: [f64; 3],
}

impl ObjectiveGradient {
    /// `sum_k w_k h''(r_k) grad r_k grad r_k^T`.
    pub fn gauss_newton(&self) -> nalgebra::DMatrix<f64> {
        let n = self.gradient.len();
        let mut h = nalgebra::DMatrix::zeros(n, n);
        for (g, w) in self.residual_gradients.iter().zip(self.curvature_weights) {
            h += g * g.transpose() * w;
        }
        h
    }
}

pub fn objective(q: &JointVector, ctx: &ObjectiveContext) -> Result<ObjectiveBreakdown, OptimizerError> {
    let cfg = ctx.config;
    let pose = ctx.chain.forward_kinematics(q)?;
    let p = pose.translation();
    let to_feature = ctx.feature.translation() - p;
    let r = to_feature.norm();
    if !(r > MIN_VIEW_DISTANCE) {
        return Err(OptimizerError::CoincidentOrigins);
    }
    let c = to_feature / r;
    let c_v = 1.0 - pose.z_axis().dot(&c).clamp(-1.0, 1.0);
    let c_per = pose.x_axis().dot(&ctx.world_up).clamp(-1.0, 1.0).abs();
    let orientation = OrientationCost {
        c_or: cfg.w4 * 0.5 * c_v + cfg.w5 * c_per,
        c_v,
        c_per,
    };
    Ok(ObjectiveBreakdown::from_components((p - ctx.target).norm(), orientation, r - cfg.d_t, cfg))
}

/// Objective with its analytic gradient from the geometric Jacobian.
pub fn objective_with_gradient(q: &JointVector, ctx: &ObjectiveContext) -> Result<ObjectiveGradient, OptimizerError> {
    let cfg = ctx.config;
    let (pose, jac) = ctx.chain.pose_and_jacobian(q)?;
    let n = q.len();
    let p = *pose.translation();
    let x_c = pose.x_axis();
    let z_c = pose.z_axis();
    let up = ctx.world_up.into_inner();

    let to_feature = ctx.feature.translation() - p;
    let r = to_feature.norm();
    if !(r > MIN_VIEW_DISTANCE) {
        return Err(OptimizerError::CoincidentOrigins);
    }
    let c = to_feature / r;
    let c_v = 1.0 - z_c.dot(&c).clamp(-1.0, 1.0);
    let x_up = x_c.dot(&up).clamp(-1.0, 1.0);
    let c_per = x_up.abs();
    let orientation = OrientationCost {
        c_or: cfg.w4 * 0.5 * c_v + cfg.w5 * c_per,
        c_v,
        c_per,
    };
    let offset = p - ctx.target;
    let c_ps = offset.norm();
    let c_d = r - cfg.d_t;
    let breakdown = ObjectiveBreakdown::from_components(c_ps, orientation, c_d, cfg);

    let dir_ps = if c_ps > 0.0 { offset / c_ps } else { Vector3::zeros() };
    // d c / d p = -(I - c c^T) / r
    let proj = (Matrix3::identity() - c * c.transpose()) / r;
    let z_proj = proj * z_c;
    let mut g_ps = DVector::zeros(n);
    let mut g_or = DVector::zeros(n);
    let mut g_d = DVector::zeros(n);
    for i in 0..n {
        let jv = Vector3::new(jac[(0, i)], jac[(1, i)], jac[(2, i)]);
        let jw = Vector3::new(jac[(3, i)], jac[(4, i)], jac[(5, i)]);
        g_ps[i] = dir_ps.dot(&jv);
        g_d[i] = -c.dot(&jv);
        let dc_v = -jw.cross(&z_c).dot(&c) + z_proj.dot(&jv);
        let dc_per = x_up.signum() * jw.cross(&x_c).dot(&up);
        g_or[i] = cfg.w4 * 0.5 * dc_v + cfg.w5 * if x_up == 0.0 { 0.0 } else { dc_per };
    }
    let gradient = &g_ps * (cfg.w1 * huber_slope(c_ps, cfg.delta1))
        + &g_or * (cfg.w2 * huber_slope(orientation.c_or, cfg.delta2))
        + &g_d * (cfg.w3 * huber_slope(c_d, cfg.delta3));
    Ok(ObjectiveGradient {
        breakdown,
        gradient,
        residual_gradients: [g_ps, g_or, g_d],
        curvature_weights: [
            cfg.w1 * huber_weight(c_ps, cfg.delta1),
            cfg.w2 * huber_weight(orientation.c_or, cfg.delta2),
            cfg.w3 * huber_weight(c_d, cfg.delta3),
        ],
    })
}
