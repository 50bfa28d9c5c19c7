//! No-go zones as convex prisms of outward-facing planes, the floor
//! half-space and the proximity constraint.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{unit, unit_vector_serde, Pose, UnitVector3};
use crate::placement::{look_at, FeatureState, PlacementConfig, PlacementError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error("prism fit needs exactly 5 points, got {0}")]
    PointCount(usize),
    #[error("degenerate prism: {0}")]
    Degenerate(&'static str),
    #[error("zone interior is empty: reference point is not inside every face")]
    EmptyInterior,
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

/// Plane with an outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    #[serde(with = "unit_vector_serde")]
    pub normal: UnitVector3,
    pub point: Vector3<f64>,
}

impl Face {
    /// Positive outside, negative inside, zero on the plane.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    /// Orthogonal projection onto the plane.
    pub fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.normal.into_inner() * self.signed_distance(p)
    }
}

/// Convex region: the intersection of the open half-spaces behind each face.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoGoZone {
    faces: Vec<Face>,
}

/// Zone as written in a scenario file: five operator-touched points (four
/// base corners then one height point) or an explicit face list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZoneSpec {
    Points { points: Vec<[f64; 3]> },
    Faces { faces: Vec<Face> },
}

impl ZoneSpec {
    pub fn build(&self) -> Result<NoGoZone, WorkspaceError> {
        match self {
            ZoneSpec::Points { points } => {
                let pts: Vec<Vector3<f64>> = points.iter().map(|p| Vector3::from(*p)).collect();
                NoGoZone::fit_prism(&pts)
            }
            ZoneSpec::Faces { faces } => NoGoZone::from_faces(faces.clone()),
        }
    }
}

impl NoGoZone {
    /// Uses the mean of the face points as the interior witness.
    pub fn from_faces(faces: Vec<Face>) -> Result<Self, WorkspaceError> {
        if faces.is_empty() {
            return Err(WorkspaceError::Degenerate("zone has no faces"));
        }
        let centroid = faces.iter().map(|f| f.point).sum::<Vector3<f64>>() / faces.len() as f64;
        Self::from_faces_with_interior(faces, &centroid)
    }

    pub fn from_faces_with_interior(faces: Vec<Face>, interior: &Vector3<f64>) -> Result<Self, WorkspaceError> {
        let zone = Self { faces };
        if zone.faces.is_empty() {
            return Err(WorkspaceError::Degenerate("zone has no faces"));
        }
        if !zone.contains(interior) {
            return Err(WorkspaceError::EmptyInterior);
        }
        Ok(zone)
    }

    /// Rectangular prism from four base points and one height point. The base
    /// plane is a least-squares fit, the lateral faces come from the
    /// minimum-area rectangle around the projected base points, and the top
    /// face sits at the fifth point's height above the base plane.
    pub fn fit_prism(points: &[Vector3<f64>]) -> Result<Self, WorkspaceError> {
        if points.len() != 5 {
            return Err(WorkspaceError::PointCount(points.len()));
        }
        let base = &points[..4];
        let apex = points[4];
        let scale = base
            .iter()
            .flat_map(|a| base.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(WorkspaceError::Degenerate("base points coincide"));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                for k in j + 1..4 {
                    let area = (base[j] - base[i]).cross(&(base[k] - base[i])).norm();
                    if area < 1e-9 * scale * scale {
                        return Err(WorkspaceError::Degenerate("three base points are collinear"));
                    }
                }
            }
        }

        let center = base.iter().sum::<Vector3<f64>>() / 4.0;
        let scatter = base
            .iter()
            .map(|p| (p - center) * (p - center).transpose())
            .sum::<Matrix3<f64>>();
        let eig = SymmetricEigen::new(scatter);
        let (min_idx, _) = eig.eigenvalues.argmin();
        let mut up = eig.eigenvectors.column(min_idx).into_owned().normalize();
        let mut height = (apex - center).dot(&up);
        if height.abs() < 1e-9 * scale {
            return Err(WorkspaceError::Degenerate("height point lies on the base plane"));
        }
        if height < 0.0 {
            up = -up;
            height = -height;
        }

        let flat: Vec<Vector3<f64>> = base.iter().map(|p| (p - center) - up * (p - center).dot(&up)).collect();
        let mut best: Option<(f64, Vector3<f64>, [f64; 4])> = None;
        for i in 0..4 {
            for j in i + 1..4 {
                let Ok(u) = unit(&(flat[j] - flat[i])) else { continue };
                let u = u.into_inner();
                let v = up.cross(&u);
                let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
                for p in &flat {
                    umin = umin.min(p.dot(&u));
                    umax = umax.max(p.dot(&u));
                    vmin = vmin.min(p.dot(&v));
                    vmax = vmax.max(p.dot(&v));
                }
                let area = (umax - umin) * (vmax - vmin);
                if best.as_ref().is_none_or(|(a, _, _)| area < *a * (1.0 - 1e-12)) {
                    best = Some((area, u, [umin, umax, vmin, vmax]));
                }
            }
        }
        let (_, u, [umin, umax, vmin, vmax]) = best.ok_or(WorkspaceError::Degenerate("base has no extent"))?;
        let v = up.cross(&u);
        let face = |n: Vector3<f64>, p: Vector3<f64>| Face {
            normal: UnitVector3::new_normalize(n),
            point: p,
        };
        let faces = vec![
            face(-up, center),
            face(up, center + up * height),
            face(-u, center + u * umin),
            face(u, center + u * umax),
            face(-v, center + v * vmin),
            face(v, center + v * vmax),
        ];
        let centroid = points.iter().sum::<Vector3<f64>>() / 5.0;
        Self::from_faces_with_interior(faces, &centroid)
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Strict interior: every signed distance negative.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.faces.iter().all(|f| f.signed_distance(p) < 0.0)
    }

    /// Face with the smallest absolute signed distance; the lowest index wins
    /// ties.
    pub fn closest_face(&self, p: &Vector3<f64>) -> (usize, f64) {
        let mut best = (0, self.faces[0].signed_distance(p));
        for (i, f) in self.faces.iter().enumerate().skip(1) {
            let d = f.signed_distance(p);
            if d.abs() < best.1.abs() {
                best = (i, d);
            }
        }
        best
    }

    /// Projects `p` onto the plane of face `index`, nudging along the normal
    /// if rounding left the result on the interior side.
    pub fn project_to_face(&self, p: &Vector3<f64>, index: usize) -> Vector3<f64> {
        let face = &self.faces[index];
        let mut q = face.project(p);
        let mut nudge = f64::EPSILON * (1.0 + q.amax());
        for _ in 0..16 {
            if face.signed_distance(&q) >= 0.0 {
                break;
            }
            q += face.normal.into_inner() * nudge;
            nudge *= 2.0;
        }
        q
    }

    /// Closest-face projection of `p`. Points not strictly inside are
    /// returned unchanged.
    pub fn boundary_point(&self, p: &Vector3<f64>) -> (Vector3<f64>, Option<usize>) {
        if !self.contains(p) {
            return (*p, None);
        }
        let (index, _) = self.closest_face(p);
        (self.project_to_face(p, index), Some(index))
    }

    /// Faces sorted by distance from `p` (ties by index), for callers that
    /// need a fallback when the closest face is unusable.
    pub fn faces_by_distance(&self, p: &Vector3<f64>) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.faces.len()).collect();
        idx.sort_by(|&a, &b| {
            let da = self.faces[a].signed_distance(p).abs();
            let db = self.faces[b].signed_distance(p).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        });
        idx
    }
}

/// Moves a violating camera pose onto the closest face of the zone and
/// re-aims it at the feature origin with a horizontal x-axis.
pub fn boundary_pose(
    zone: &NoGoZone,
    desired: &Pose,
    feature: &FeatureState,
    cfg: &PlacementConfig,
) -> Result<Pose, WorkspaceError> {
    let (p, _) = zone.boundary_point(desired.translation());
    Ok(look_at(&p, feature.translation(), &cfg.world_up)?)
}

pub fn proximity_violated(p_cam: &Vector3<f64>, feature: &FeatureState, min_dist: f64) -> bool {
    (p_cam - feature.translation()).norm() < min_dist
}

/// Horizontal floor plane at world height `height`; points strictly below
/// violate it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Floor {
    pub height: f64,
}

impl Floor {
    pub fn below(&self, p: &Vector3<f64>) -> bool {
        p.z < self.height
    }

    pub fn penetration(&self, p: &Vector3<f64>) -> f64 {
        (self.height - p.z).max(0.0)
    }

    pub fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        if self.below(p) {
            Vector3::new(p.x, p.y, self.height)
        } else {
            *p
        }
    }
}

/// Everything the camera position must stay out of.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Workspace {
    pub zone: Option<NoGoZone>,
    pub floor: Option<Floor>,
}

/// Outcome of [`Workspace::resolve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    pub point: Vector3<f64>,
    pub in_zone: bool,
    pub below_floor: bool,
    /// Zone face the point was projected onto.
    pub face: Option<usize>,
}

impl Workspace {
    pub fn violated(&self, p: &Vector3<f64>) -> bool {
        self.zone.as_ref().is_some_and(|z| z.contains(p)) || self.floor.is_some_and(|f| f.below(p))
    }

    /// Depth by which `p` violates the workspace, zero when admissible.
    pub fn penetration(&self, p: &Vector3<f64>) -> f64 {
        let zone = self
            .zone
            .as_ref()
            .filter(|z| z.contains(p))
            .map_or(0.0, |z| -z.closest_face(p).1);
        let floor = self.floor.map_or(0.0, |f| f.penetration(p));
        zone.max(floor)
    }

    /// Maps `p` to an admissible point: floor violations are lifted to the
    /// floor, zone violations go to the closest face whose projection is
    /// above the floor. If no face qualifies, the closest face is used.
    pub fn resolve(&self, p: &Vector3<f64>) -> Resolution {
        let below_floor = self.floor.is_some_and(|f| f.below(p));
        let mut point = self.floor.map_or(*p, |f| f.project(p));
        let mut in_zone = false;
        let mut face = None;
        if let Some(zone) = &self.zone {
            in_zone = zone.contains(p) || zone.contains(&point);
            if zone.contains(&point) {
                let order = zone.faces_by_distance(&point);
                let mut chosen = order[0];
                for &i in &order {
                    let q = zone.project_to_face(&point, i);
                    if !self.floor.is_some_and(|f| f.below(&q)) && !zone.contains(&q) {
                        chosen = i;
                        break;
                    }
                }
                point = zone.project_to_face(&point, chosen);
                face = Some(chosen);
            }
        }
        Resolution {
            point,
            in_zone,
            below_floor,
            face,
        }
    }
}
