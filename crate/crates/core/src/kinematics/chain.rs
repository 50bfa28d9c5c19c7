use nalgebra::{Matrix6xX, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{JointVector, KinematicsError};
use crate::geometry::{unit, Pose, PoseSpec, UnitVector3};

/// Stand-in remote-center-of-motion arm shipped with the crate: outer yaw
/// and pitch about the fulcrum, a prismatic insertion, and a three-joint
/// wrist carrying the camera. Dimensions are plausible, not measured.
pub const DEFAULT_CHAIN_JSON: &str = include_str!("../../data/default_chain.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One joint: a fixed transform from the previous frame, then motion about
/// (revolute) or along (prismatic) `axis`, expressed in the post-offset frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub offset: Pose,
    pub axis: UnitVector3,
}

impl Joint {
    fn motion(&self, value: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::from_rotation(Rotation3::from_axis_angle(&self.axis, value)),
            JointKind::Prismatic => Pose::from_translation(self.axis.into_inner() * value),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinematicChain {
    name: String,
    joints: Vec<Joint>,
    lower: JointVector,
    upper: JointVector,
    tool_offset: Pose,
    home: JointVector,
}

/// Per-joint data the Jacobian needs: world-frame joint origin and axis.
struct JointFrame {
    origin: Vector3<f64>,
    axis: Vector3<f64>,
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        joints: Vec<Joint>,
        lower: JointVector,
        upper: JointVector,
        tool_offset: Pose,
        home: Option<JointVector>,
    ) -> Result<Self, KinematicsError> {
        let n = joints.len();
        if n == 0 {
            return Err(KinematicsError::Empty);
        }
        for v in [&lower, &upper] {
            if v.len() != n {
                return Err(KinematicsError::DimensionMismatch {
                    expected: n,
                    actual: v.len(),
                });
            }
        }
        for (i, joint) in joints.iter().enumerate() {
            if !(lower[i] < upper[i]) {
                return Err(KinematicsError::InvalidLimits {
                    joint: joint.name.clone(),
                    lower: lower[i],
                    upper: upper[i],
                });
            }
        }
        let home = match home {
            Some(h) => {
                if h.len() != n {
                    return Err(KinematicsError::DimensionMismatch {
                        expected: n,
                        actual: h.len(),
                    });
                }
                h
            }
            None => (&lower + &upper) * 0.5,
        };
        Ok(Self {
            name: name.into(),
            joints,
            lower,
            upper,
            tool_offset,
            home,
        })
    }

    pub fn default_rcm() -> Self {
        Self::from_json(DEFAULT_CHAIN_JSON).expect("bundled chain definition is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, KinematicsError> {
        let file: ChainFile =
            serde_json::from_str(text).map_err(|e| KinematicsError::Config(e.to_string()))?;
        file.build()
    }

    pub fn to_file(&self) -> ChainFile {
        ChainFile {
            name: self.name.clone(),
            joints: self
                .joints
                .iter()
                .enumerate()
                .map(|(i, j)| JointFile {
                    name: j.name.clone(),
                    kind: j.kind,
                    axis: [j.axis.x, j.axis.y, j.axis.z],
                    offset: PoseSpec::from(&j.offset),
                    lower: self.lower[i],
                    upper: self.upper[i],
                })
                .collect(),
            tool_offset: PoseSpec::from(&self.tool_offset),
            home: Some(self.home.iter().copied().collect()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn lower(&self) -> &JointVector {
        &self.lower
    }

    pub fn upper(&self) -> &JointVector {
        &self.upper
    }

    pub fn tool_offset(&self) -> &Pose {
        &self.tool_offset
    }

    pub fn home(&self) -> &JointVector {
        &self.home
    }

    /// Same chain with different joint limits.
    pub fn with_limits(&self, lower: JointVector, upper: JointVector) -> Result<Self, KinematicsError> {
        Self::new(
            self.name.clone(),
            self.joints.clone(),
            lower,
            upper,
            self.tool_offset,
            None,
        )
        .map(|mut c| {
            c.home = self.home.clone();
            c
        })
    }

    /// Same chain with a different end-effector-to-camera transform.
    pub fn with_tool_offset(&self, tool_offset: Pose) -> Self {
        Self {
            tool_offset,
            ..self.clone()
        }
    }

    pub fn check_dimension(&self, q: &JointVector) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    /// End-effector pose without the tool offset.
    pub fn flange_pose(&self, q: &JointVector) -> Result<Pose, KinematicsError> {
        self.check_dimension(q)?;
        Ok(self
            .joints
            .iter()
            .zip(q.iter())
            .fold(Pose::identity(), |t, (joint, &value)| {
                t.compose(&joint.offset).compose(&joint.motion(value))
            }))
    }

    /// Camera pose: `f_k(q) * tool_offset`.
    pub fn forward_kinematics(&self, q: &JointVector) -> Result<Pose, KinematicsError> {
        Ok(self.flange_pose(q)?.compose(&self.tool_offset))
    }

    fn frames(&self, q: &JointVector) -> (Vec<JointFrame>, Pose) {
        let mut t = Pose::identity();
        let mut frames = Vec::with_capacity(self.dof());
        for (joint, &value) in self.joints.iter().zip(q.iter()) {
            t = t.compose(&joint.offset);
            frames.push(JointFrame {
                origin: *t.translation(),
                axis: t.transform_vector(&joint.axis),
            });
            t = t.compose(&joint.motion(value));
        }
        (frames, t.compose(&self.tool_offset))
    }

    /// Camera pose together with the geometric Jacobian of the camera origin
    /// (rows 0..3 linear velocity, rows 3..6 angular velocity, world frame).
    pub fn pose_and_jacobian(&self, q: &JointVector) -> Result<(Pose, Matrix6xX<f64>), KinematicsError> {
        self.check_dimension(q)?;
        let (frames, pose) = self.frames(q);
        let tip = *pose.translation();
        let mut jac = Matrix6xX::zeros(self.dof());
        for (i, (frame, joint)) in frames.iter().zip(&self.joints).enumerate() {
            let (linear, angular) = match joint.kind {
                JointKind::Revolute => (frame.axis.cross(&(tip - frame.origin)), frame.axis),
                JointKind::Prismatic => (frame.axis, Vector3::zeros()),
            };
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&linear);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&angular);
        }
        Ok((pose, jac))
    }

    pub fn jacobian(&self, q: &JointVector) -> Result<Matrix6xX<f64>, KinematicsError> {
        self.pose_and_jacobian(q).map(|(_, j)| j)
    }

    /// Inclusive bound check: `q_lower <= q <= q_upper` element-wise.
    pub fn within_joint_limits(&self, q: &JointVector) -> Result<bool, KinematicsError> {
        self.check_dimension(q)?;
        Ok(q
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (lo, hi))| lo <= v && v <= hi))
    }

    pub fn clamp(&self, q: &JointVector) -> JointVector {
        JointVector::from_iterator(
            q.len(),
            q.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi)),
        )
    }

    /// Upper bound on the distance the tip can be from the first joint origin.
    pub fn reach(&self) -> f64 {
        let mut total = 0.0;
        for (i, joint) in self.joints.iter().enumerate().skip(1) {
            total += joint.offset.translation().norm();
            if joint.kind == JointKind::Prismatic {
                total += self.lower[i].abs().max(self.upper[i].abs());
            }
        }
        if self.joints[0].kind == JointKind::Prismatic {
            total += self.lower[0].abs().max(self.upper[0].abs());
        }
        total + self.tool_offset.translation().norm()
    }
}

/// Free function form of [`KinematicChain::forward_kinematics`].
pub fn forward_kinematics(chain: &KinematicChain, q: &JointVector) -> Result<Pose, KinematicsError> {
    chain.forward_kinematics(q)
}

/// On-disk chain definition (JSON).
///
/// ```json
/// {
///   "name": "planar",
///   "joints": [
///     {"name": "j1", "type": "revolute", "axis": [0, 0, 1],
///      "offset": {"translation": [0, 0, 0], "rpy_deg": [0, 0, 0]},
///      "lower": -3.14, "upper": 3.14}
///   ],
///   "tool_offset": {"translation": [0.1, 0, 0]},
///   "home": [0.0]
/// }
/// ```
/// Offsets accept either `{translation, rpy_deg}` or the flat 12-number pose record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    #[serde(default)]
    pub name: String,
    pub joints: Vec<JointFile>,
    #[serde(default = "identity_spec")]
    pub tool_offset: PoseSpec,
    #[serde(default)]
    pub home: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointFile {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default = "identity_spec")]
    pub offset: PoseSpec,
    pub lower: f64,
    pub upper: f64,
}

fn identity_spec() -> PoseSpec {
    PoseSpec::Parts {
        translation: [0.0; 3],
        rpy_deg: [0.0; 3],
    }
}

impl ChainFile {
    pub fn build(&self) -> Result<KinematicChain, KinematicsError> {
        let config = |what: String| KinematicsError::Config(what);
        let joints = self
            .joints
            .iter()
            .map(|j| {
                Ok(Joint {
                    name: j.name.clone(),
                    kind: j.kind,
                    offset: j
                        .offset
                        .to_pose()
                        .map_err(|e| config(format!("joint {}: {e}", j.name)))?,
                    axis: unit(&Vector3::from(j.axis))
                        .map_err(|e| config(format!("joint {}: axis {e}", j.name)))?,
                })
            })
            .collect::<Result<Vec<_>, KinematicsError>>()?;
        let lower = JointVector::from_iterator(self.joints.len(), self.joints.iter().map(|j| j.lower));
        let upper = JointVector::from_iterator(self.joints.len(), self.joints.iter().map(|j| j.upper));
        let tool = self
            .tool_offset
            .to_pose()
            .map_err(|e| config(format!("tool_offset: {e}")))?;
        let home = self.home.as_ref().map(|h| JointVector::from_column_slice(h));
        KinematicChain::new(self.name.clone(), joints, lower, upper, tool, home)
    }
}
