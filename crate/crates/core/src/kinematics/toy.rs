//! Small chains with closed-form geometry, used in tests and examples.

use nalgebra::Vector3;

use super::{Joint, JointKind, JointVector, KinematicChain};
use crate::geometry::Pose;

fn joint(name: &str, kind: JointKind, offset: Pose, axis: Vector3<f64>) -> Joint {
    Joint {
        name: name.into(),
        kind,
        offset,
        axis: nalgebra::Unit::new_normalize(axis),
    }
}

/// Planar arm in the xy-plane: two z-axis revolute joints, links `l1`, `l2`.
/// The camera frame sits at the tip with the base orientation composed with
/// the joint rotations.
pub fn planar_two_link(l1: f64, l2: f64, lower: [f64; 2], upper: [f64; 2]) -> KinematicChain {
    KinematicChain::new(
        "planar-2r",
        vec![
            joint("shoulder", JointKind::Revolute, Pose::identity(), Vector3::z()),
            joint(
                "elbow",
                JointKind::Revolute,
                Pose::from_translation(Vector3::new(l1, 0.0, 0.0)),
                Vector3::z(),
            ),
        ],
        JointVector::from_row_slice(&lower),
        JointVector::from_row_slice(&upper),
        Pose::from_translation(Vector3::new(l2, 0.0, 0.0)),
        None,
    )
    .expect("toy chain limits are ordered")
}

/// Planar two-link arm mounted on a vertical prismatic lift: the tip height
/// is the third joint value, decoupled from the planar `(x, y)` position.
pub fn planar_two_link_lift(l1: f64, l2: f64, lower: [f64; 3], upper: [f64; 3]) -> KinematicChain {
    KinematicChain::new(
        "planar-2r-lift",
        vec![
            joint("shoulder", JointKind::Revolute, Pose::identity(), Vector3::z()),
            joint(
                "elbow",
                JointKind::Revolute,
                Pose::from_translation(Vector3::new(l1, 0.0, 0.0)),
                Vector3::z(),
            ),
            joint(
                "lift",
                JointKind::Prismatic,
                Pose::from_translation(Vector3::new(l2, 0.0, 0.0)),
                Vector3::z(),
            ),
        ],
        JointVector::from_row_slice(&lower),
        JointVector::from_row_slice(&upper),
        Pose::identity(),
        None,
    )
    .expect("toy chain limits are ordered")
}
