use nalgebra::{DVector, Vector6};
use serde::{Deserialize, Serialize};

use super::{JointVector, KinematicChain, KinematicsError};
use crate::geometry::Pose;

/// Damping policy and termination settings for [`ik_newton_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    /// Convergence threshold on the norm of the 6-vector pose error
    /// (meters and radians, weighted 1:1).
    pub tol: f64,
    pub max_iter: usize,
    pub initial_damping: f64,
    /// Multiplier applied to the damping whenever the Jacobian condition
    /// number exceeds `condition_limit`.
    pub damping_growth: f64,
    pub condition_limit: f64,
    /// Damping beyond which the configuration is declared singular.
    pub max_damping: f64,
    /// Per-iteration cap on the joint step norm.
    pub max_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50,
            initial_damping: 1e-6,
            damping_growth: 10.0,
            condition_limit: 1e8,
            max_damping: 1e-1,
            max_step: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkSolution {
    pub q: JointVector,
    pub iterations: usize,
    pub error_norm: f64,
}

/// Why the Newton solver gave up. Failure is an expected outcome that the
/// controller routes to the constrained solver.
#[derive(Clone, Debug, PartialEq)]
pub enum IkFailure {
    NotConverged { iterations: usize, error_norm: f64, q: JointVector },
    Singular { iterations: usize, error_norm: f64, q: JointVector },
    InvalidInput(KinematicsError),
}

impl IkFailure {
    pub fn label(&self) -> &'static str {
        match self {
            IkFailure::NotConverged { .. } => "not-converged",
            IkFailure::Singular { .. } => "singular",
            IkFailure::InvalidInput(_) => "invalid-input",
        }
    }
}

/// 6-vector pose error: translation difference stacked on the world-frame
/// axis-angle rotation error.
pub fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.translation() - current.translation();
    let dr = current.orientation_error_to(target);
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// Newton inverse kinematics with the default damping policy. Joint limits
/// are not enforced.
pub fn ik_newton(
    chain: &KinematicChain,
    target: &Pose,
    q0: &JointVector,
    tol: f64,
    max_iter: usize,
) -> Result<IkSolution, IkFailure> {
    ik_newton_with(
        chain,
        target,
        q0,
        &NewtonConfig {
            tol,
            max_iter,
            ..NewtonConfig::default()
        },
    )
}

/// Damped least-squares Newton iteration `dq = J^+ e` computed from the SVD
/// of the Jacobian, with damping raised on ill-conditioning.
pub fn ik_newton_with(
    chain: &KinematicChain,
    target: &Pose,
    q0: &JointVector,
    cfg: &NewtonConfig,
) -> Result<IkSolution, IkFailure> {
    chain.check_dimension(q0).map_err(IkFailure::InvalidInput)?;
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(IkFailure::InvalidInput(KinematicsError::Config(
            "newton tolerance must be positive and max_iter at least 1".into(),
        )));
    }
    let mut q = q0.clone();
    let mut damping = cfg.initial_damping;
    let mut error_norm = f64::INFINITY;
    for iteration in 0..=cfg.max_iter {
        let (pose, jac) = chain.pose_and_jacobian(&q).map_err(IkFailure::InvalidInput)?;
        let err = pose_error(&pose, target);
        error_norm = err.norm();
        if !error_norm.is_finite() {
            break;
        }
        if error_norm <= cfg.tol {
            return Ok(IkSolution {
                q,
                iterations: iteration,
                error_norm,
            });
        }
        if iteration == cfg.max_iter {
            break;
        }
        let svd = jac.svd(true, true);
        let (Some(u), Some(v_t)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
            return Err(IkFailure::Singular {
                iterations: iteration,
                error_norm,
                q,
            });
        };
        let sigma = &svd.singular_values;
        let s_max = sigma.max();
        let s_min = sigma.min();
        if s_min <= 0.0 || s_max / s_min > cfg.condition_limit {
            damping *= cfg.damping_growth;
            if damping > cfg.max_damping {
                return Err(IkFailure::Singular {
                    iterations: iteration,
                    error_norm,
                    q,
                });
            }
        }
        let mut dq = DVector::zeros(q.len());
        for k in 0..sigma.len() {
            let s = sigma[k];
            let gain = s / (s * s + damping * damping);
            let coeff = u.column(k).dot(&err) * gain;
            dq += v_t.row(k).transpose() * coeff;
        }
        let step = dq.norm();
        if step > cfg.max_step {
            dq *= cfg.max_step / step;
        }
        q += dq;
    }
    Err(IkFailure::NotConverged {
        iterations: cfg.max_iter,
        error_norm,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::toy::planar_two_link;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    #[test]
    fn converged_seed_returns_immediately() {
        let chain = KinematicChain::default_rcm();
        let q0 = chain.home().clone();
        let target = chain.forward_kinematics(&q0).unwrap();
        let sol = ik_newton(&chain, &target, &q0, 1e-6, 50).unwrap();
        assert!(sol.iterations <= 1);
        assert!((sol.q - q0).amax() < 1e-9);
    }

    #[test]
    fn nearby_target_round_trips() {
        let chain = KinematicChain::default_rcm();
        let q0 = chain.home().clone();
        let mut q_star = q0.clone();
        q_star[0] += 0.1;
        q_star[1] -= 0.08;
        q_star[2] += 0.02;
        q_star[4] += 0.1;
        let target = chain.forward_kinematics(&q_star).unwrap();
        let sol = ik_newton(&chain, &target, &q0, 1e-9, 50).unwrap();
        let reached = chain.forward_kinematics(&sol.q).unwrap();
        assert!(pose_error(&reached, &target).norm() < 1e-6);
    }

    #[test]
    fn unreachable_target_fails() {
        let chain = planar_two_link(0.1, 0.1, [-3.0, -3.0], [3.0, 3.0]);
        let target = Pose::from_translation(Vector3::new(0.5, 0.0, 0.0));
        assert!(target.translation().norm() > chain.reach());
        let result = ik_newton(&chain, &target, &JointVector::from_vec(vec![0.1, 0.2]), 1e-6, 50);
        assert!(matches!(result, Err(IkFailure::NotConverged { .. }) | Err(IkFailure::Singular { .. })));
    }

    #[test]
    fn planar_two_link_position_and_orientation() {
        let chain = planar_two_link(0.1, 0.1, [-3.0, -3.0], [3.0, 3.0]);
        let q_star = JointVector::from_vec(vec![0.4, 1.1]);
        let target = chain.forward_kinematics(&q_star).unwrap();
        let sol = ik_newton(&chain, &target, &JointVector::from_vec(vec![0.3, 1.0]), 1e-10, 50).unwrap();
        assert!((sol.q - q_star).amax() < 1e-8);
    }

    #[test]
    fn rejects_bad_arguments() {
        let chain = planar_two_link(0.1, 0.1, [-3.0, -3.0], [3.0, 3.0]);
        let q = JointVector::zeros(2);
        assert!(matches!(
            ik_newton(&chain, &Pose::identity(), &q, 0.0, 10),
            Err(IkFailure::InvalidInput(_))
        ));
        assert!(matches!(
            ik_newton(&chain, &Pose::identity(), &JointVector::zeros(3), 1e-6, 10),
            Err(IkFailure::InvalidInput(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_from_perturbed_seed(u in proptest::collection::vec(0.1..0.9f64, 6),
                                          du in proptest::collection::vec(-0.05..0.05f64, 6)) {
            let chain = KinematicChain::default_rcm();
            let q = JointVector::from_iterator(6, (0..6).map(|i| chain.lower()[i] + u[i] * (chain.upper()[i] - chain.lower()[i])));
            let seed = &q + JointVector::from_vec(du);
            let target = chain.forward_kinematics(&q).unwrap();
            let sol = ik_newton(&chain, &target, &seed, 1e-10, 100).unwrap();
            let reached = chain.forward_kinematics(&sol.q).unwrap();
            prop_assert!((reached.translation() - target.translation()).norm() < 1e-6);
            prop_assert!(reached.rotation_angle_to(&target) < 1e-5);
        }
    }
}
