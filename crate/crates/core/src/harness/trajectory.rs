//! Synthetic feature trajectories: parametric curves, a rounded polyline
//! "wire", recorded pose streams and static features.

use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{unit, UnitVector3};
use crate::placement::FeatureState;

/// How the feature normal is chosen along the curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalMode {
    /// Curve principal normal.
    Frenet,
    Fixed([f64; 3]),
}

impl Default for NormalMode {
    fn default() -> Self {
        NormalMode::Fixed([-1.0, 0.0, 0.0])
    }
}

/// Maps wall time to path time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpeedProfile {
    #[default]
    Constant,
    /// Constant acceleration from rest to full speed over `ramp_time` seconds.
    Ramp { ramp_time: f64 },
}

impl SpeedProfile {
    fn path_time(&self, t: f64) -> f64 {
        match *self {
            SpeedProfile::Constant => t,
            SpeedProfile::Ramp { ramp_time } => {
                if t < ramp_time {
                    0.5 * t * t / ramp_time
                } else {
                    t - 0.5 * ramp_time
                }
            }
        }
    }
}

/// Smooth pseudo-random hand tremor added to the feature position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TremorSpec {
    /// Amplitude of each sinusoidal component, meters.
    pub amplitude: f64,
    pub min_frequency: f64,
    pub max_frequency: f64,
    #[serde(default = "default_components")]
    pub components: usize,
}

fn default_components() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveSpec {
    Static {
        position: [f64; 3],
    },
    /// Circle of `radius` around `center` in the plane normal to `axis`.
    Circle {
        center: [f64; 3],
        radius: f64,
        axis: [f64; 3],
        period: f64,
    },
    /// Lemniscate of Gerono: `radius * (sin s, sin s cos s)` in the plane
    /// normal to `axis`.
    FigureEight {
        center: [f64; 3],
        radius: f64,
        axis: [f64; 3],
        period: f64,
    },
    /// Polyline with corners replaced by tangent arcs, traversed at `speed`.
    Wire {
        points: Vec<[f64; 3]>,
        corner_radius: f64,
        speed: f64,
        #[serde(default)]
        closed: bool,
    },
    /// CSV with columns `t,x,y,z,nx,ny,nz`, linearly interpolated.
    Replay { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    #[serde(flatten)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub normal: NormalMode,
    #[serde(default)]
    pub speed_profile: SpeedProfile,
    /// Multiplies path time; 0 freezes the feature.
    #[serde(default = "one")]
    pub speed_scale: f64,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub tremor: Option<TremorSpec>,
    #[serde(default)]
    pub rng_seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimedFeature {
    pub time: f64,
    pub feature: FeatureState,
}

/// Plane basis `(e1, e2)` with `e1 x e2 = axis`.
fn plane_basis(axis: &UnitVector3) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - axis.into_inner() * helper.dot(axis)).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

#[derive(Clone, Debug)]
enum Piece {
    Line { start: Vector3<f64>, dir: Vector3<f64>, length: f64 },
    Arc { center: Vector3<f64>, radius: f64, u: Vector3<f64>, w: Vector3<f64>, angle: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Line { length, .. } => *length,
            Piece::Arc { radius, angle, .. } => radius * angle,
        }
    }

    fn at(&self, s: f64) -> Vector3<f64> {
        match self {
            Piece::Line { start, dir, .. } => start + dir * s,
            Piece::Arc { center, radius, u, w, .. } => {
                let th = s / radius;
                center + (u * th.cos() + w * th.sin()) * *radius
            }
        }
    }
}

/// Arc-length parameterized rounded polyline.
#[derive(Clone, Debug)]
struct Wire {
    pieces: Vec<Piece>,
    total: f64,
    closed: bool,
}

struct Corner {
    enter: Vector3<f64>,
    exit: Vector3<f64>,
    arc: Option<Piece>,
}

impl Wire {
    fn new(points: &[Vector3<f64>], corner_radius: f64, closed: bool) -> Result<Self, HarnessError> {
        let m = points.len();
        if m < 2 || (closed && m < 3) {
            return Err(HarnessError::Config("wire needs at least two points (three when closed)".into()));
        }
        if !(corner_radius >= 0.0) {
            return Err(HarnessError::Config("corner_radius must be non-negative".into()));
        }
        let seg_count = if closed { m } else { m - 1 };
        let seg = |i: usize| points[(i + 1) % m] - points[i % m];
        for i in 0..seg_count {
            if seg(i).norm() < 1e-12 {
                return Err(HarnessError::Config("wire has repeated consecutive points".into()));
            }
        }
        let corners: Vec<Corner> = (0..m)
            .map(|i| {
                let has_corner = closed || (i > 0 && i + 1 < m);
                if !has_corner || corner_radius == 0.0 {
                    return Ok(Corner { enter: points[i], exit: points[i], arc: None });
                }
                let before = seg((i + m - 1) % m);
                let after = seg(i);
                let a = before.normalize();
                let b = after.normalize();
                let phi = a.cross(&b).norm().atan2(a.dot(&b));
                if phi < 1e-9 {
                    return Ok(Corner { enter: points[i], exit: points[i], arc: None });
                }
                if phi > std::f64::consts::PI - 1e-6 {
                    return Err(HarnessError::Config("wire reverses direction at a vertex".into()));
                }
                let half = (0.5 * phi).tan();
                let max_tangent = 0.5 * before.norm().min(after.norm());
                let radius = corner_radius.min(max_tangent / half);
                let tangent = radius * half;
                let n = (b - a * a.dot(&b)).normalize();
                let enter = points[i] - a * tangent;
                let center = enter + n * radius;
                Ok(Corner {
                    enter,
                    exit: points[i] + b * tangent,
                    arc: Some(Piece::Arc { center, radius, u: -n, w: a, angle: phi }),
                })
            })
            .collect::<Result<_, HarnessError>>()?;
        let mut pieces = Vec::new();
        for i in 0..seg_count {
            let j = (i + 1) % m;
            let start = corners[i].exit;
            let d = corners[j].enter - start;
            if d.norm() > 1e-12 {
                pieces.push(Piece::Line { start, dir: d.normalize(), length: d.norm() });
            }
            if let Some(arc) = &corners[j].arc {
                if closed || j + 1 < m {
                    pieces.push(arc.clone());
                }
            }
        }
        let total = pieces.iter().map(Piece::length).sum();
        Ok(Self { pieces, total, closed })
    }

    fn at(&self, s: f64) -> Vector3<f64> {
        let mut s = if self.closed { s.rem_euclid(self.total) } else { s.clamp(0.0, self.total) };
        for p in &self.pieces {
            let len = p.length();
            if s <= len {
                return p.at(s);
            }
            s -= len;
        }
        let last = self.pieces.last().expect("wire has pieces");
        last.at(last.length())
    }
}

#[derive(Clone, Debug)]
struct Recorded {
    times: Vec<f64>,
    positions: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
}

impl Recorded {
    fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
        let mut rec = Recorded { times: vec![], positions: vec![], normals: vec![] };
        for row in reader.records() {
            let row = row.map_err(|e| HarnessError::csv(path, e))?;
            let vals: Vec<f64> = row
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            if vals.len() != 7 {
                return Err(HarnessError::Config(format!("{}: expected 7 columns t,x,y,z,nx,ny,nz", path.display())));
            }
            if rec.times.last().is_some_and(|t| vals[0] <= *t) {
                return Err(HarnessError::Config(format!("{}: times must increase", path.display())));
            }
            rec.times.push(vals[0]);
            rec.positions.push(Vector3::new(vals[1], vals[2], vals[3]));
            rec.normals.push(Vector3::new(vals[4], vals[5], vals[6]));
        }
        if rec.times.is_empty() {
            return Err(HarnessError::Config(format!("{}: no samples", path.display())));
        }
        Ok(rec)
    }

    fn at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let k = self.times.partition_point(|x| *x <= t);
        if k == 0 {
            return (self.positions[0], self.normals[0]);
        }
        if k == self.times.len() {
            return (self.positions[k - 1], self.normals[k - 1]);
        }
        let s = (t - self.times[k - 1]) / (self.times[k] - self.times[k - 1]);
        (
            self.positions[k - 1].lerp(&self.positions[k], s),
            self.normals[k - 1].lerp(&self.normals[k], s),
        )
    }
}

#[derive(Clone, Debug)]
enum Curve {
    Static(Vector3<f64>),
    Planar { center: Vector3<f64>, radius: f64, e1: Vector3<f64>, e2: Vector3<f64>, period: f64, eight: bool },
    Wire { wire: Wire, speed: f64 },
    Recorded(Recorded),
}

#[derive(Clone, Debug)]
struct Tremor {
    amplitude: f64,
    components: Vec<(f64, f64, Vector3<f64>)>,
}

/// A feature trajectory ready for sampling.
#[derive(Clone, Debug)]
pub struct Trajectory {
    curve: Curve,
    normal: NormalMode,
    fixed_normal: Option<Vector3<f64>>,
    profile: SpeedProfile,
    speed_scale: f64,
    duration: f64,
    tremor: Option<Tremor>,
    world_up: UnitVector3,
}

impl Trajectory {
    /// Validates `spec`; relative replay paths resolve against `base_dir`.
    pub fn new(spec: &TrajectorySpec, base_dir: &Path, world_up: UnitVector3) -> Result<Self, HarnessError> {
        if !(spec.duration > 0.0) || !spec.duration.is_finite() {
            return Err(HarnessError::Config("trajectory duration must be positive".into()));
        }
        if !(spec.speed_scale >= 0.0) {
            return Err(HarnessError::Config("speed_scale must be non-negative".into()));
        }
        if let SpeedProfile::Ramp { ramp_time } = spec.speed_profile {
            if !(ramp_time > 0.0) {
                return Err(HarnessError::Config("ramp_time must be positive".into()));
            }
        }
        let v3 = |a: &[f64; 3]| Vector3::from(*a);
        let curve = match &spec.curve {
            CurveSpec::Static { position } => Curve::Static(v3(position)),
            CurveSpec::Circle { center, radius, axis, period } | CurveSpec::FigureEight { center, radius, axis, period } => {
                if !(*radius > 0.0) || !(*period > 0.0) {
                    return Err(HarnessError::Config("curve radius and period must be positive".into()));
                }
                let axis = unit(&v3(axis)).map_err(|_| HarnessError::Config("curve axis must be nonzero".into()))?;
                let (e1, e2) = plane_basis(&axis);
                Curve::Planar {
                    center: v3(center),
                    radius: *radius,
                    e1,
                    e2,
                    period: *period,
                    eight: matches!(spec.curve, CurveSpec::FigureEight { .. }),
                }
            }
            CurveSpec::Wire { points, corner_radius, speed, closed } => {
                if !(*speed >= 0.0) {
                    return Err(HarnessError::Config("wire speed must be non-negative".into()));
                }
                let pts: Vec<Vector3<f64>> = points.iter().map(v3).collect();
                Curve::Wire { wire: Wire::new(&pts, *corner_radius, *closed)?, speed: *speed }
            }
            CurveSpec::Replay { path } => Curve::Recorded(Recorded::load(&base_dir.join(path))?),
        };
        let fixed_normal = match &spec.normal {
            NormalMode::Fixed(n) => Some(unit(&v3(n)).map_err(|_| HarnessError::Config("fixed normal must be nonzero".into()))?.into_inner()),
            NormalMode::Frenet => {
                if !matches!(curve, Curve::Planar { .. }) {
                    return Err(HarnessError::Config("frenet normals need a circle or figure-eight curve".into()));
                }
                None
            }
        };
        let tremor = match &spec.tremor {
            None => None,
            Some(t) => {
                if !(t.amplitude >= 0.0) || !(t.min_frequency > 0.0) || !(t.max_frequency >= t.min_frequency) {
                    return Err(HarnessError::Config("tremor needs amplitude >= 0 and 0 < min_frequency <= max_frequency".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
                let components = (0..t.components)
                    .map(|_| {
                        let f = if t.max_frequency > t.min_frequency {
                            rng.random_range(t.min_frequency..t.max_frequency)
                        } else {
                            t.min_frequency
                        };
                        let phase = rng.random_range(0.0..TAU);
                        let dir = loop {
                            let d = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                            let n = d.norm();
                            if n > 1e-3 && n <= 1.0 {
                                break d / n;
                            }
                        };
                        (f, phase, dir)
                    })
                    .collect();
                Some(Tremor { amplitude: t.amplitude, components })
            }
        };
        Ok(Self {
            curve,
            normal: spec.normal.clone(),
            fixed_normal,
            profile: spec.speed_profile.clone(),
            speed_scale: spec.speed_scale,
            duration: spec.duration,
            tremor,
            world_up,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Position and unit normal at wall time `t`.
    pub fn position_normal(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let s = self.profile.path_time(t) * self.speed_scale;
        let (mut p, frenet) = match &self.curve {
            Curve::Static(p) => (*p, None),
            Curve::Planar { center, radius, e1, e2, period, eight } => {
                let th = TAU * s / period;
                let (sn, cs) = th.sin_cos();
                if *eight {
                    // (sin th, sin th cos th) and its second derivative.
                    let pos = center + (e1 * sn + e2 * (sn * cs)) * *radius;
                    let d1 = e1 * cs + e2 * (cs * cs - sn * sn);
                    let d2 = -e1 * sn - e2 * (4.0 * sn * cs);
                    let tangent = d1.normalize();
                    let normal = d2 - tangent * d2.dot(&tangent);
                    (pos, Some(normal))
                } else {
                    let radial = e1 * cs + e2 * sn;
                    (center + radial * *radius, Some(-radial))
                }
            }
            Curve::Wire { wire, speed } => (wire.at(s * speed), None),
            Curve::Recorded(rec) => {
                let (p, n) = rec.at(s);
                (p, Some(n))
            }
        };
        if let Some(tr) = &self.tremor {
            for (f, phase, dir) in &tr.components {
                p += dir * (tr.amplitude * (TAU * f * t + phase).sin());
            }
        }
        let n = match (&self.normal, self.fixed_normal) {
            (NormalMode::Fixed(_), Some(n)) => n,
            _ => frenet.and_then(|n| unit(&n).ok()).map_or(-Vector3::x(), |n| n.into_inner()),
        };
        (p, n)
    }

    pub fn sample(&self, t: f64) -> Result<FeatureState, HarnessError> {
        let (p, n) = self.position_normal(t);
        FeatureState::from_position_normal(p, n, &self.world_up).map_err(|e| HarnessError::Config(format!("feature at t={t}: {e}")))
    }

    /// Samples `[0, duration)` at `rate_hz`.
    pub fn generate(&self, rate_hz: f64) -> Result<Vec<TimedFeature>, HarnessError> {
        let count = (self.duration * rate_hz).round() as usize;
        (0..count)
            .map(|k| {
                let time = k as f64 / rate_hz;
                Ok(TimedFeature { time, feature: self.sample(time)? })
            })
            .collect()
    }
}

pub fn generate_trajectory(spec: &TrajectorySpec, base_dir: &Path, world_up: UnitVector3, rate_hz: f64) -> Result<Vec<TimedFeature>, HarnessError> {
    Trajectory::new(spec, base_dir, world_up)?.generate(rate_hz)
}
