//! Constrained inverse kinematics: a Huber-robust camera-placement objective
//! minimized inside the joint-limit box.

mod objective;
mod qp;
mod solver;

pub use objective::{
    cost_distance, cost_orientation, cost_position, huber, huber_derivative, objective, objective_with_gradient,
    ObjectiveBreakdown, ObjectiveContext, ObjectiveGradient, OrientationCost,
};
pub use qp::solve_box_qp;
pub use solver::{solve_constrained_ik, ConstrainedSolution, SolveReport, Termination};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointVector, KinematicChain, KinematicsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("huber threshold must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("camera origin coincides with the feature origin")]
    CoincidentOrigins,
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Explicit joint bounds overriding the chain limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Position weight.
    pub w1: f64,
    /// Orientation weight.
    pub w2: f64,
    /// Distance weight.
    pub w3: f64,
    /// Viewing-vector weight inside the orientation cost.
    pub w4: f64,
    /// Horizontal-x weight inside the orientation cost.
    pub w5: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    /// Desired feature distance, meters.
    pub d_t: f64,
    /// Each evaluation computes the objective and its gradient.
    pub max_evals: usize,
    /// Stop once successive accepted totals differ by less than this.
    pub ftol: f64,
    /// Defaults to the chain's joint limits.
    pub bounds: Option<Bounds>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            w1: 15.0,
            w2: 30.0,
            w3: 25.0,
            w4: 2.0,
            w5: 0.5,
            delta1: 0.01,
            delta2: 0.17,
            delta3: 0.02,
            d_t: 0.11,
            max_evals: 50,
            ftol: 5e-4,
            bounds: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let weights = [self.w1, self.w2, self.w3, self.w4, self.w5];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(OptimizerError::Config("weights must be finite and non-negative".into()));
        }
        for d in [self.delta1, self.delta2, self.delta3] {
            if !(d > 0.0) {
                return Err(OptimizerError::NonPositiveDelta(d));
            }
        }
        if self.max_evals == 0 {
            return Err(OptimizerError::Config("max_evals must be at least 1".into()));
        }
        if !(self.ftol > 0.0) {
            return Err(OptimizerError::Config("ftol must be positive".into()));
        }
        if !(self.d_t > 0.0) {
            return Err(OptimizerError::Config("d_t must be positive".into()));
        }
        Ok(())
    }

    /// Lower and upper bounds for `chain`, validated against its dimension.
    pub fn bounds_for(&self, chain: &KinematicChain) -> Result<(JointVector, JointVector), OptimizerError> {
        match &self.bounds {
            None => Ok((chain.lower().clone(), chain.upper().clone())),
            Some(b) => {
                let n = chain.dof();
                for v in [&b.lower, &b.upper] {
                    if v.len() != n {
                        return Err(KinematicsError::DimensionMismatch { expected: n, actual: v.len() }.into());
                    }
                }
                if b.lower.iter().zip(&b.upper).any(|(l, u)| !(l <= u)) {
                    return Err(OptimizerError::Config("bounds must satisfy lower <= upper".into()));
                }
                Ok((JointVector::from_vec(b.lower.clone()), JointVector::from_vec(b.upper.clone())))
            }
        }
    }
}
