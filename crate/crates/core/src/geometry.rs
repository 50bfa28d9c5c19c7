//! Rigid transforms, direction vectors and paired-point rigid registration.
//!
//! Every frame in the crate (camera, feature, arm base, world) is expressed
//! with [`Pose`], a rotation matrix plus a translation in meters. `a.compose(&b)`
//! maps a point through `b` first and then through `a`, matching the usual
//! homogeneous-matrix product `A * B`.

use nalgebra::{Matrix3, Rotation3, SymmetricEigen, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Unit-norm direction in R^3.
pub type UnitVector3 = Unit<Vector3<f64>>;

/// Tolerance used to accept externally supplied rotation matrices.
pub const ORTHONORMAL_INPUT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("zero-length vector has no direction")]
    ZeroVector,
    #[error("degenerate registration: {0}")]
    DegenerateRegistration(&'static str),
    #[error("rotation matrix is not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("expected {expected} values, got {actual}")]
    BadLength { expected: usize, actual: usize },
}

/// Rigid-body transform: `p' = R p + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, rejecting rotations that deviate from SO(3) by more
    /// than [`ORTHONORMAL_INPUT_TOL`]. Accepted matrices are projected back
    /// onto SO(3) so the stored rotation is orthonormal to machine precision.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let deviation = orthonormality_error(&rotation);
        if !deviation.is_finite() || deviation > ORTHONORMAL_INPUT_TOL {
            return Err(GeometryError::NotOrthonormal(deviation));
        }
        let rotation = if deviation > 1e-13 {
            Rotation3::from_matrix_eps(&rotation, 1e-15, 100, Rotation3::identity()).into_inner()
        } else {
            rotation
        };
        Ok(Self { rotation, translation })
    }

    /// Builds a pose from a rotation the caller has already constructed
    /// orthonormally (cross products of unit vectors, products of rotations).
    pub fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Rotation3<f64>) -> Self {
        Self {
            rotation: rotation.into_inner(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation of `angle` radians about `axis`, no translation.
    pub fn from_axis_angle(axis: &UnitVector3, angle: f64) -> Self {
        Self::from_rotation(Rotation3::from_axis_angle(axis, angle))
    }

    /// Rotation from roll/pitch/yaw (radians, applied x then y then z) and a translation.
    pub fn from_rpy_translation(rpy: [f64; 3], translation: Vector3<f64>) -> Self {
        Self {
            rotation: Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]).into_inner(),
            translation,
        }
    }

    /// Builds a pose whose rotation columns are the given frame axes.
    pub fn from_axes(x: Vector3<f64>, y: Vector3<f64>, z: Vector3<f64>, origin: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::from_columns(&[x, y, z]),
            translation: origin,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn x_axis(&self) -> Vector3<f64> {
        self.rotation.column(0).into_owned()
    }

    pub fn y_axis(&self) -> Vector3<f64> {
        self.rotation.column(1).into_owned()
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    pub fn with_translation(&self, translation: Vector3<f64>) -> Self {
        Self {
            rotation: self.rotation,
            translation,
        }
    }

    /// `self * other`: maps points through `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation))
    }

    /// Magnitude (radians) of the rotation taking `self`'s orientation to `other`'s.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        self.quaternion().angle_to(&other.quaternion())
    }

    /// World-frame axis-angle vector `log(R_target * R_self^T)`.
    pub fn orientation_error_to(&self, target: &Pose) -> Vector3<f64> {
        let relative = target.rotation * self.rotation.transpose();
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(relative)).scaled_axis()
    }

    /// Translation lerp plus rotation slerp at fraction `s` in [0, 1].
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let q = self.quaternion();
        let rotation = q
            .try_slerp(&other.quaternion(), s, 1e-12)
            .unwrap_or_else(|| q.nlerp(&other.quaternion(), s));
        Pose {
            rotation: rotation.to_rotation_matrix().into_inner(),
            translation: self.translation.lerp(&other.translation, s),
        }
    }

    /// Flat record: 9 rotation entries row-major followed by the translation.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
            t.x, t.y, t.z,
        ]
    }

    pub fn from_row_major(values: &[f64]) -> Result<Pose, GeometryError> {
        if values.len() != 12 {
            return Err(GeometryError::BadLength {
                expected: 12,
                actual: values.len(),
            });
        }
        let rotation = Matrix3::new(
            values[0], values[1], values[2], values[3], values[4], values[5], values[6], values[7],
            values[8],
        );
        Pose::new(rotation, Vector3::new(values[9], values[10], values[11]))
    }

    /// Max-abs deviation of `R R^T` from identity combined with `|det R - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rotation)
    }
}

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    let gram = r * r.transpose() - Matrix3::identity();
    gram.amax().max((r.determinant() - 1.0).abs())
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Pose::from_row_major(&values).map_err(serde::de::Error::custom)
    }
}

/// Human-editable pose in configuration files: either the flat 12-number
/// record or a translation with roll/pitch/yaw in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoseSpec {
    RowMajor([f64; 12]),
    Parts {
        #[serde(default)]
        translation: [f64; 3],
        #[serde(default)]
        rpy_deg: [f64; 3],
    },
}

impl PoseSpec {
    pub fn to_pose(&self) -> Result<Pose, GeometryError> {
        match self {
            PoseSpec::RowMajor(values) => Pose::from_row_major(values),
            PoseSpec::Parts { translation, rpy_deg } => Ok(Pose::from_rpy_translation(
                rpy_deg.map(f64::to_radians),
                Vector3::from(*translation),
            )),
        }
    }
}

impl From<&Pose> for PoseSpec {
    fn from(pose: &Pose) -> Self {
        PoseSpec::RowMajor(pose.to_row_major())
    }
}

/// Serde adapter storing a [`UnitVector3`] as `[x, y, z]`; input is
/// normalized and zero vectors are rejected.
pub mod unit_vector_serde {
    use super::{unit, UnitVector3};
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &UnitVector3, serializer: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<UnitVector3, D::Error> {
        let raw = <[f64; 3]>::deserialize(deserializer)?;
        unit(&Vector3::from(raw)).map_err(serde::de::Error::custom)
    }
}

/// `a * b`.
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn invert(p: &Pose) -> Pose {
    p.inverse()
}

pub fn rot_x(angle: f64) -> Pose {
    Pose::from_axis_angle(&Vector3::x_axis(), angle)
}

pub fn rot_y(angle: f64) -> Pose {
    Pose::from_axis_angle(&Vector3::y_axis(), angle)
}

pub fn rot_z(angle: f64) -> Pose {
    Pose::from_axis_angle(&Vector3::z_axis(), angle)
}

pub fn unit(v: &Vector3<f64>) -> Result<UnitVector3, GeometryError> {
    Unit::try_new(*v, f64::MIN_POSITIVE.sqrt()).ok_or(GeometryError::ZeroVector)
}

/// `v1 . v2 / (|v1| |v2|)`, clamped to [-1, 1].
pub fn cosine_similarity(v1: &Vector3<f64>, v2: &Vector3<f64>) -> Result<f64, GeometryError> {
    let n1 = v1.norm();
    let n2 = v2.norm();
    if n1 == 0.0 || n2 == 0.0 || !n1.is_finite() || !n2.is_finite() {
        return Err(GeometryError::ZeroVector);
    }
    Ok((v1.dot(v2) / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Unsigned angle between two vectors in radians, accurate near 0 and pi.
pub fn angle_between(v1: &Vector3<f64>, v2: &Vector3<f64>) -> Result<f64, GeometryError> {
    if v1.norm() == 0.0 || v2.norm() == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    Ok(v1.cross(v2).norm().atan2(v1.dot(v2)))
}

/// Outcome of a paired-point registration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Registration {
    /// Maps points expressed in the `a` frame into the `b` frame.
    pub transform: Pose,
    /// Mean of `|T a_i - b_i|` over all pairs (meters).
    pub mean_abs_error: f64,
    pub rms_error: f64,
    pub max_error: f64,
}

/// Closed-form least-squares rigid registration (SVD of the cross-covariance).
///
/// Finds `T` minimizing `sum |T a_i - b_i|^2` and reports residual statistics,
/// including the mean absolute error.
pub fn register_paired_points(
    a_points: &[Vector3<f64>],
    b_points: &[Vector3<f64>],
) -> Result<Registration, GeometryError> {
    check_registration_input(a_points, b_points)?;
    let weights = vec![1.0; a_points.len()];
    let transform = weighted_kabsch(a_points, b_points, &weights)?;
    Ok(residual_stats(transform, a_points, b_points))
}

/// Least-squares registration followed by iteratively reweighted refinement
/// toward the minimum mean-absolute-error transform.
///
/// The refined transform is only kept when it lowers the mean absolute error.
pub fn register_paired_points_l1(
    a_points: &[Vector3<f64>],
    b_points: &[Vector3<f64>],
    max_iterations: usize,
) -> Result<Registration, GeometryError> {
    let mut best = register_paired_points(a_points, b_points)?;
    let mut current = best.transform;
    for _ in 0..max_iterations {
        let weights: Vec<f64> = a_points
            .iter()
            .zip(b_points)
            .map(|(a, b)| 1.0 / (current.transform_point(a) - b).norm().max(1e-9))
            .collect();
        current = weighted_kabsch(a_points, b_points, &weights)?;
        let candidate = residual_stats(current, a_points, b_points);
        let improvement = best.mean_abs_error - candidate.mean_abs_error;
        if improvement > 0.0 {
            best = candidate;
        }
        if improvement.abs() < 1e-15 {
            break;
        }
    }
    Ok(best)
}

fn check_registration_input(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Result<(), GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::DegenerateRegistration("point sets differ in size"));
    }
    if a.len() < 3 {
        return Err(GeometryError::DegenerateRegistration("at least three point pairs are required"));
    }
    if is_collinear(a) || is_collinear(b) {
        return Err(GeometryError::DegenerateRegistration("points are collinear"));
    }
    Ok(())
}

fn is_collinear(points: &[Vector3<f64>]) -> bool {
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let scatter = points
        .iter()
        .map(|p| {
            let d = p - centroid;
            d * d.transpose()
        })
        .sum::<Matrix3<f64>>();
    let mut eig = SymmetricEigen::new(scatter).eigenvalues.as_slice().to_vec();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig[0] <= 0.0 || eig[1] <= 1e-12 * eig[0]
}

fn weighted_kabsch(a: &[Vector3<f64>], b: &[Vector3<f64>], w: &[f64]) -> Result<Pose, GeometryError> {
    let total: f64 = w.iter().sum();
    let ca = a.iter().zip(w).map(|(p, wi)| p * *wi).sum::<Vector3<f64>>() / total;
    let cb = b.iter().zip(w).map(|(p, wi)| p * *wi).sum::<Vector3<f64>>() / total;
    let h = a
        .iter()
        .zip(b)
        .zip(w)
        .map(|((pa, pb), wi)| (pa - ca) * (pb - cb).transpose() * *wi)
        .sum::<Matrix3<f64>>();
    let svd = h.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(GeometryError::DegenerateRegistration("SVD did not converge"));
    };
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    Ok(Pose::from_parts_unchecked(rotation, cb - rotation * ca))
}

fn residual_stats(transform: Pose, a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Registration {
    let residuals: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(pa, pb)| (transform.transform_point(pa) - pb).norm())
        .collect();
    let n = residuals.len() as f64;
    Registration {
        transform,
        mean_abs_error: residuals.iter().sum::<f64>() / n,
        rms_error: (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt(),
        max_error: residuals.iter().cloned().fold(0.0, f64::max),
    }
}
