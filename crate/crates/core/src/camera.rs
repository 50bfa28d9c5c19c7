//! Ideal pinhole stereo cameras: projection, field-of-view visibility,
//! on-screen centroid error and unsharp-mask sharpening.

use nalgebra::Vector3;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("image dimensions must be positive, got {0}x{1}")]
    BadResolution(u32, u32),
    #[error("focal length {focal} px disagrees with the {axis} field of view of {fov_deg} deg")]
    FovMismatch { axis: &'static str, focal: f64, fov_deg: f64 },
    #[error("invalid camera parameter: {0}")]
    Invalid(String),
    #[error("image is empty")]
    EmptyImage,
}

/// Largest accepted gap between a focal length and its field of view.
pub const FOV_TOLERANCE_DEG: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Camera frame in the rig frame.
    pub extrinsic: Pose,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection {
    Pixel { u: f64, v: f64 },
    BehindCamera,
}

fn focal_from_fov(pixels: u32, fov_deg: f64) -> f64 {
    0.5 * pixels as f64 / (0.5 * fov_deg.to_radians()).tan()
}

fn fov_from_focal(pixels: u32, focal: f64) -> f64 {
    (2.0 * (pixels as f64 / (2.0 * focal)).atan()).to_degrees()
}

impl CameraModel {
    /// Focal lengths from the fields of view, principal point at the image
    /// center.
    pub fn from_fov(width: u32, height: u32, hfov_deg: f64, vfov_deg: f64, extrinsic: Pose) -> Result<Self, CameraError> {
        if width == 0 || height == 0 {
            return Err(CameraError::BadResolution(width, height));
        }
        for fov in [hfov_deg, vfov_deg] {
            if !(fov > 0.0 && fov < 180.0) {
                return Err(CameraError::Invalid(format!("field of view {fov} deg out of (0, 180)")));
            }
        }
        Ok(Self {
            fx: focal_from_fov(width, hfov_deg),
            fy: focal_from_fov(height, vfov_deg),
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
            extrinsic,
        })
    }

    pub fn hfov_deg(&self) -> f64 {
        fov_from_focal(self.width, self.fx)
    }

    pub fn vfov_deg(&self) -> f64 {
        fov_from_focal(self.height, self.fy)
    }

    /// Checks the focal lengths against nominal fields of view.
    pub fn check_fov(&self, hfov_deg: f64, vfov_deg: f64) -> Result<(), CameraError> {
        if (self.hfov_deg() - hfov_deg).abs() > FOV_TOLERANCE_DEG {
            return Err(CameraError::FovMismatch { axis: "horizontal", focal: self.fx, fov_deg: hfov_deg });
        }
        if (self.vfov_deg() - vfov_deg).abs() > FOV_TOLERANCE_DEG {
            return Err(CameraError::FovMismatch { axis: "vertical", focal: self.fy, fov_deg: vfov_deg });
        }
        Ok(())
    }

    /// Pinhole projection of a point given in this camera's frame.
    pub fn project(&self, p: &Vector3<f64>) -> Projection {
        if !(p.z > 0.0) {
            return Projection::BehindCamera;
        }
        Projection::Pixel {
            u: self.fx * p.x / p.z + self.cx,
            v: self.fy * p.y / p.z + self.cy,
        }
    }

    pub fn in_frame(&self, u: f64, v: f64) -> bool {
        (0.0..self.width as f64).contains(&u) && (0.0..self.height as f64).contains(&v)
    }

    pub fn visible(&self, p: &Vector3<f64>) -> bool {
        match self.project(p) {
            Projection::Pixel { u, v } => self.in_frame(u, v),
            Projection::BehindCamera => false,
        }
    }

    /// Expresses a world point in this camera's frame, given the rig pose.
    pub fn to_camera_frame(&self, rig_pose: &Pose, p_world: &Vector3<f64>) -> Vector3<f64> {
        rig_pose.compose(&self.extrinsic).inverse().transform_point(p_world)
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }
}

/// Offset of a projected point from the geometric screen center
/// `(width/2, height/2)`, in pixels and as percentages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CentroidErrors {
    pub l2_pix: f64,
    /// Percent of the screen diagonal.
    pub l2_pct: f64,
    pub u_err_pix: f64,
    /// Percent of the screen width.
    pub u_err_pct: f64,
    pub v_err_pix: f64,
    /// Percent of the screen height.
    pub v_err_pct: f64,
}

pub fn centroid_errors(cam: &CameraModel, u: f64, v: f64) -> CentroidErrors {
    let w = cam.width as f64;
    let h = cam.height as f64;
    let du = u - w / 2.0;
    let dv = v - h / 2.0;
    let l2 = du.hypot(dv);
    CentroidErrors {
        l2_pix: l2,
        l2_pct: 100.0 * l2 / cam.diagonal(),
        u_err_pix: du.abs(),
        u_err_pct: 100.0 * du.abs() / w,
        v_err_pix: dv.abs(),
        v_err_pct: 100.0 * dv.abs() / h,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StereoRig {
    pub left: CameraModel,
    pub right: CameraModel,
    pub baseline: f64,
}

impl StereoRig {
    /// Two copies of `model` with parallel optical axes, offset by
    /// `baseline` along the rig x-axis and centered on the rig origin.
    pub fn symmetric(model: CameraModel, baseline: f64) -> Result<Self, CameraError> {
        if !(baseline > 0.0) {
            return Err(CameraError::Invalid(format!("baseline must be positive, got {baseline}")));
        }
        let offset = Vector3::new(0.5 * baseline, 0.0, 0.0);
        Ok(Self {
            left: CameraModel {
                extrinsic: model.extrinsic.with_translation(model.extrinsic.translation() - offset),
                ..model
            },
            right: CameraModel {
                extrinsic: model.extrinsic.with_translation(model.extrinsic.translation() + offset),
                ..model
            },
            baseline,
        })
    }
}

/// Camera and rig parameters as written in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    pub width: u32,
    pub height: u32,
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    /// Meters.
    pub baseline: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 1280,
            height: 960,
            hfov_deg: 62.2,
            vfov_deg: 48.8,
            baseline: 0.015,
        }
    }
}

impl CameraConfig {
    pub fn model(&self) -> Result<CameraModel, CameraError> {
        CameraModel::from_fov(self.width, self.height, self.hfov_deg, self.vfov_deg, Pose::identity())
    }

    pub fn rig(&self) -> Result<StereoRig, CameraError> {
        StereoRig::symmetric(self.model()?, self.baseline)
    }
}

/// Edge handling of the blur in [`sharpen`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Wrap around; preserves the image mean.
    Periodic,
    /// Repeat the edge pixels.
    Clamp,
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|x| *x /= sum);
    k
}

fn blur_axis(image: &Array2<f64>, kernel: &[f64], axis: usize, boundary: Boundary) -> Array2<f64> {
    let (rows, cols) = image.dim();
    let len = if axis == 0 { rows } else { cols } as isize;
    let radius = (kernel.len() / 2) as isize;
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let center = if axis == 0 { r } else { c } as isize;
        kernel
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let i = center + k as isize - radius;
                let i = match boundary {
                    Boundary::Periodic => i.rem_euclid(len),
                    Boundary::Clamp => i.clamp(0, len - 1),
                } as usize;
                w * if axis == 0 { image[(i, c)] } else { image[(r, i)] }
            })
            .sum()
    })
}

/// Separable Gaussian blur with standard deviation `sigma` pixels.
pub fn gaussian_blur(image: &Array2<f64>, sigma: f64, boundary: Boundary) -> Result<Array2<f64>, CameraError> {
    if image.is_empty() {
        return Err(CameraError::EmptyImage);
    }
    if !(sigma > 0.0) {
        return Err(CameraError::Invalid(format!("blur sigma must be positive, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    Ok(blur_axis(&blur_axis(image, &kernel, 0, boundary), &kernel, 1, boundary))
}

/// Unsharp mask `(alpha + 1) I - alpha G(I)`.
pub fn sharpen(image: &Array2<f64>, alpha: f64, blur_sigma: f64, boundary: Boundary) -> Result<Array2<f64>, CameraError> {
    if !(alpha >= 0.0) {
        return Err(CameraError::Invalid(format!("alpha must be non-negative, got {alpha}")));
    }
    let blurred = gaussian_blur(image, blur_sigma, boundary)?;
    Ok(image * (alpha + 1.0) - blurred * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(fx: f64, fy: f64, cx: f64, cy: f64) -> CameraModel {
        CameraModel { fx, fy, cx, cy, width: 1280, height: 960, extrinsic: Pose::identity() }
    }

    #[test]
    fn projection_examples() {
        let cam = model(600.0, 600.0, 640.0, 480.0);
        assert_eq!(cam.project(&Vector3::new(0.0, 0.0, 0.3)), Projection::Pixel { u: 640.0, v: 480.0 });
        assert_eq!(cam.project(&Vector3::new(0.1, 0.0, 0.6)), Projection::Pixel { u: 740.0, v: 480.0 });
        assert_eq!(cam.project(&Vector3::new(0.0, 0.0, -0.1)), Projection::BehindCamera);
        assert_eq!(cam.project(&Vector3::new(0.1, 0.0, 0.0)), Projection::BehindCamera);
    }

    #[test]
    fn visibility_edges() {
        let cam = model(600.0, 600.0, 640.0, 480.0);
        assert!(cam.visible(&Vector3::new(0.0, 0.0, 1.0)));
        // u = 640 + 600 * x / z = 1280 exactly.
        assert!(!cam.visible(&Vector3::new(640.0 / 600.0, 0.0, 1.0)));
        assert!(cam.visible(&Vector3::new(-640.0 / 600.0, 0.0, 1.0)));
        assert!(!cam.visible(&Vector3::new(0.0, 0.0, -1.0)));
    }

    #[test]
    fn default_fov_round_trips() {
        let cam = CameraConfig::default().model().unwrap();
        assert!((cam.hfov_deg() - 62.2).abs() < 1e-9);
        assert!((cam.vfov_deg() - 48.8).abs() < 1e-9);
        assert!(cam.check_fov(62.2, 48.8).is_ok());
        assert!(cam.check_fov(60.0, 48.8).is_err());
        assert!(CameraModel::from_fov(0, 960, 62.2, 48.8, Pose::identity()).is_err());
    }

    #[test]
    fn centroid_error_arithmetic() {
        let cam = model(600.0, 600.0, 640.0, 480.0);
        let zero = centroid_errors(&cam, 640.0, 480.0);
        assert_eq!(zero.l2_pix, 0.0);
        assert_eq!(zero.u_err_pct, 0.0);
        let e = centroid_errors(&cam, 800.0, 480.0);
        assert_eq!(e.l2_pix, 160.0);
        assert_eq!(e.l2_pct, 10.0);
        assert_eq!(e.u_err_pct, 12.5);
        assert_eq!(centroid_errors(&cam, 0.0, 0.0).l2_pct, 50.0);
    }

    #[test]
    fn stereo_rig_offsets_along_x() {
        let rig = CameraConfig::default().rig().unwrap();
        let p = Vector3::new(0.0, 0.0, 0.11);
        let l = rig.left.to_camera_frame(&Pose::identity(), &p);
        let r = rig.right.to_camera_frame(&Pose::identity(), &p);
        assert!((l.x - 0.0075).abs() < 1e-15);
        assert!((r.x + 0.0075).abs() < 1e-15);
        assert!(StereoRig::symmetric(rig.left, 0.0).is_err());
    }

    #[test]
    fn sharpen_identities() {
        let img = Array2::from_shape_fn((16, 16), |(r, c)| ((r * 7 + c * 3) % 11) as f64);
        assert_eq!(sharpen(&img, 0.0, 1.0, Boundary::Clamp).unwrap(), img);
        let flat = Array2::from_elem((8, 5), 3.25);
        for b in [Boundary::Clamp, Boundary::Periodic] {
            let out = sharpen(&flat, 1.0, 1.5, b).unwrap();
            assert!(out.iter().all(|x| (x - 3.25).abs() < 1e-12));
        }
        assert_eq!(sharpen(&Array2::zeros((0, 0)), 1.0, 1.0, Boundary::Clamp), Err(CameraError::EmptyImage));
        assert!(sharpen(&img, -1.0, 1.0, Boundary::Clamp).is_err());
    }

    #[test]
    fn step_edge_overshoot() {
        let img = Array2::from_shape_fn((16, 16), |(_, c)| if c < 8 { 0.0 } else { 1.0 });
        let out = sharpen(&img, 1.0, 1.0, Boundary::Clamp).unwrap();
        let blurred = gaussian_blur(&img, 1.0, Boundary::Clamp).unwrap();
        for ((o, i), g) in out.iter().zip(img.iter()).zip(blurred.iter()) {
            assert!((o - (2.0 * i - g)).abs() < 1e-15);
        }
        // Direct one-dimensional blur at the first bright column.
        let k = gaussian_kernel(1.0);
        let g8: f64 = k.iter().enumerate().map(|(j, w)| w * if 8 + j < 3 + 8 { 0.0 } else { 1.0 }).sum();
        assert!((out[(5, 8)] - (2.0 - g8)).abs() < 1e-12);
        assert!(out[(5, 8)] > 1.0);
        assert!(out[(5, 7)] < 0.0);
    }

    proptest! {
        #[test]
        fn periodic_blur_preserves_mean(values in proptest::collection::vec(-5.0..5.0f64, 63), alpha in 0.0..3.0f64, sigma in 0.3..4.0f64) {
            let img = Array2::from_shape_vec((7, 9), values).unwrap();
            let out = sharpen(&img, alpha, sigma, Boundary::Periodic).unwrap();
            prop_assert!((out.mean().unwrap() - img.mean().unwrap()).abs() < 1e-9);
        }

        #[test]
        fn visible_implies_in_bounds(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -0.5..2.0f64) {
            let cam = CameraConfig::default().model().unwrap();
            let p = Vector3::new(x, y, z);
            if cam.visible(&p) {
                match cam.project(&p) {
                    Projection::Pixel { u, v } => prop_assert!((0.0..1280.0).contains(&u) && (0.0..960.0).contains(&v)),
                    Projection::BehindCamera => prop_assert!(false),
                }
            }
        }

        #[test]
        fn optical_axis_points_hit_principal_point(z in 0.01..10.0f64) {
            let cam = CameraConfig::default().model().unwrap();
            prop_assert_eq!(cam.project(&Vector3::new(0.0, 0.0, z)), Projection::Pixel { u: cam.cx, v: cam.cy });
        }
    }
}
