//! Serial-chain kinematics: forward kinematics, geometric Jacobian, joint
//! limits and the damped Newton inverse-kinematics solver.

mod chain;
mod ik;

pub use chain::{forward_kinematics, ChainFile, Joint, JointFile, JointKind, KinematicChain, DEFAULT_CHAIN_JSON};
pub mod toy;
pub use ik::{ik_newton, ik_newton_with, pose_error, IkFailure, IkSolution, NewtonConfig};

use nalgebra::DVector;
use thiserror::Error;

/// Joint-space vector: radians for revolute joints, meters for prismatic ones.
pub type JointVector = DVector<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("joint vector has {actual} entries, chain has {expected} joints")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("joint {joint}: lower limit {lower} must be below upper limit {upper}")]
    InvalidLimits { joint: String, lower: f64, upper: f64 },
    #[error("chain has no joints")]
    Empty,
    #[error("invalid chain definition: {0}")]
    Config(String),
}
