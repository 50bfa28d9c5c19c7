//! Hierarchical auxiliary-camera placement for a teleoperated surgical arm.
//!
//! The pipeline computes a geometric viewpoint on a tracked feature, keeps it
//! outside operator-defined no-go zones, solves Newton inverse kinematics
//! and falls back to a Huber-robust, joint-bounded optimizer when Newton
//! fails or leaves the joint limits.

// `!(x > 0.0)` is the idiom for rejecting NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod controller;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod optimizer;
pub mod placement;
pub mod workspace;
