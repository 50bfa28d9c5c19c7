use nalgebra::DVector;

use crate::geometry::Pose;

/// Caps the translation step toward `desired` at `step_limit`; the rotation
/// is slerped by the same fraction.
pub fn interpolate_cartesian(current: &Pose, desired: &Pose, step_limit: f64) -> Pose {
    let distance = (desired.translation() - current.translation()).norm();
    if !(distance > step_limit) {
        return *desired;
    }
    current.interpolate(desired, step_limit / distance)
}

/// Per-joint quintic polynomials `q(t) = sum c_k t^k`, `t` in `[0, duration]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuinticTrajectory {
    coefficients: Vec<[f64; 6]>,
    duration: f64,
}

/// Position, velocity and acceleration at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSample {
    pub q: DVector<f64>,
    pub velocity: DVector<f64>,
    pub acceleration: DVector<f64>,
}

impl QuinticTrajectory {
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn coefficients(&self) -> &[[f64; 6]] {
        &self.coefficients
    }

    /// Samples at `t`, clamped into `[0, duration]`.
    pub fn evaluate(&self, t: f64) -> JointSample {
        let t = t.clamp(0.0, self.duration);
        let n = self.coefficients.len();
        let mut q = DVector::zeros(n);
        let mut v = DVector::zeros(n);
        let mut a = DVector::zeros(n);
        for (i, c) in self.coefficients.iter().enumerate() {
            q[i] = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
            v[i] = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
            a[i] = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        }
        JointSample {
            q,
            velocity: v,
            acceleration: a,
        }
    }
}

/// Quintic from `(q0, v0, a0)` to rest at `q1` after `duration` seconds.
///
/// # Panics
/// If the vectors differ in length or `duration` is not positive.
pub fn quintic_joint_trajectory(
    q0: &DVector<f64>,
    v0: &DVector<f64>,
    a0: &DVector<f64>,
    q1: &DVector<f64>,
    duration: f64,
) -> QuinticTrajectory {
    assert!(duration > 0.0, "quintic duration must be positive");
    let n = q0.len();
    assert!(v0.len() == n && a0.len() == n && q1.len() == n, "quintic endpoint dimensions differ");
    let t = duration;
    let (t2, t3) = (t * t, t * t * t);
    let coefficients = (0..n)
        .map(|i| {
            let h = q1[i] - q0[i];
            let (v, a) = (v0[i], a0[i]);
            [
                q0[i],
                v,
                0.5 * a,
                (20.0 * h - 12.0 * v * t - 3.0 * a * t2) / (2.0 * t3),
                (-30.0 * h + 16.0 * v * t + 3.0 * a * t2) / (2.0 * t3 * t),
                (12.0 * h - 6.0 * v * t - a * t2) / (2.0 * t3 * t2),
            ]
        })
        .collect();
    QuinticTrajectory { coefficients, duration }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rot_z;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    #[test]
    fn cartesian_gate() {
        let current = Pose::identity();
        let near = rot_z(0.2).with_translation(Vector3::new(0.010, 0.0, 0.0));
        assert_eq!(interpolate_cartesian(&current, &near, 0.015), near);
        let far = rot_z(0.2).with_translation(Vector3::new(0.0, 0.030, 0.0));
        let mid = interpolate_cartesian(&current, &far, 0.015);
        assert!((mid.translation().norm() - 0.015).abs() < 1e-15);
        assert!((mid.rotation_angle_to(&current) - 0.1).abs() < 1e-12);
        assert_eq!(interpolate_cartesian(&far, &far, 0.015), far);
    }

    #[test]
    fn rest_to_rest_is_symmetric() {
        let z = DVector::zeros(1);
        for t in [0.1, 1.0, 7.5] {
            let traj = quintic_joint_trajectory(&z, &z, &z, &DVector::from_element(1, 1.0), t);
            assert!((traj.evaluate(t / 2.0).q[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn start_velocity_matches_finite_difference() {
        let q0 = DVector::from_vec(vec![0.1, -0.3]);
        let v0 = DVector::from_vec(vec![0.2, 0.2]);
        let a0 = DVector::zeros(2);
        let q1 = DVector::from_vec(vec![0.5, 0.4]);
        let traj = quintic_joint_trajectory(&q0, &v0, &a0, &q1, 2.0);
        let h = 1e-6;
        let fd_start = (traj.evaluate(h).q - traj.evaluate(0.0).q) / h;
        let fd_end = (traj.evaluate(2.0).q - traj.evaluate(2.0 - h).q) / h;
        assert!((fd_start - v0).amax() < 1e-5);
        assert!(fd_end.amax() < 1e-5);
    }

    proptest! {
        #[test]
        fn boundary_conditions(data in proptest::collection::vec(-1.0..1.0f64, 12), t in 0.1..5.0f64) {
            let q0 = DVector::from_row_slice(&data[0..3]);
            let v0 = DVector::from_row_slice(&data[3..6]);
            let a0 = DVector::from_row_slice(&data[6..9]);
            let q1 = DVector::from_row_slice(&data[9..12]);
            let traj = quintic_joint_trajectory(&q0, &v0, &a0, &q1, t);
            let start = traj.evaluate(0.0);
            let end = traj.evaluate(t);
            prop_assert!((start.q - &q0).amax() < 1e-10);
            prop_assert!((start.velocity - &v0).amax() < 1e-10);
            prop_assert!((start.acceleration - &a0).amax() < 1e-10);
            prop_assert!((end.q - &q1).amax() < 1e-10);
            prop_assert!(end.velocity.amax() < 1e-10);
            prop_assert!(end.acceleration.amax() < 1e-10);
        }
    }
}
