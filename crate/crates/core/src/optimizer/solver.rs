use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::objective::{objective_with_gradient, ObjectiveContext, ObjectiveGradient};
use super::qp::solve_box_qp;
use super::OptimizerError;
use crate::kinematics::JointVector;

const ARMIJO: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Successive totals changed by less than `ftol`, or the step vanished.
    Ftol,
    MaxEvals,
    /// No step reduced the objective.
    Stalled,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Ftol => "ftol",
            Termination::MaxEvals => "max-evals",
            Termination::Stalled => "stalled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Objective-plus-gradient evaluations performed.
    pub evaluations: usize,
    pub initial_total: f64,
    pub final_total: f64,
    pub termination: Termination,
    /// The seed was outside the bounds and was clamped first.
    pub seed_clamped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedSolution {
    pub q: JointVector,
    pub report: SolveReport,
}

fn clamp(q: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(q.len(), (0..q.len()).map(|i| q[i].clamp(lo[i], hi[i])))
}

fn initial_model(eval: &ObjectiveGradient) -> DMatrix<f64> {
    let n = eval.gradient.len();
    let gn = eval.gauss_newton();
    let scale = gn.trace() / n as f64;
    let mu = 1e-6 * scale.max(1e-6);
    gn + DMatrix::identity(n, n) * mu
}

/// Powell-damped BFGS update keeping `b` positive definite.
fn bfgs_update(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 0.0) {
        return;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r = y * theta + &bs * (1.0 - theta);
    let sr = s.dot(&r);
    if !(sr > 0.0) {
        return;
    }
    *b += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
}

/// Minimizes the placement objective inside the joint bounds with a
/// quasi-Newton sequential quadratic method: each step solves a box QP on
/// a damped BFGS model, then backtracks until the Armijo condition holds.
/// The returned point is always within bounds and never worse than the
/// clamped seed.
pub fn solve_constrained_ik(q_seed: &JointVector, ctx: &ObjectiveContext) -> Result<ConstrainedSolution, OptimizerError> {
    let cfg = ctx.config;
    cfg.validate()?;
    ctx.chain.check_dimension(q_seed)?;
    let (lo, hi) = cfg.bounds_for(ctx.chain)?;
    let mut x = clamp(q_seed, &lo, &hi);
    let seed_clamped = &x != q_seed;

    let mut evaluations = 1;
    let mut current = objective_with_gradient(&x, ctx)?;
    let initial_total = current.breakdown.total;
    let mut b = initial_model(&current);
    let mut iterations = 0;
    let termination;

    loop {
        if evaluations >= cfg.max_evals {
            termination = Termination::MaxEvals;
            break;
        }
        let g = &current.gradient;
        let d = solve_box_qp(&b, g, &(&lo - &x), &(&hi - &x));
        let slope = g.dot(&d);
        if d.amax() <= 1e-14 * (1.0 + x.amax()) || !(slope < 0.0) {
            termination = if d.amax() <= 1e-14 * (1.0 + x.amax()) { Termination::Ftol } else { Termination::Stalled };
            break;
        }
        iterations += 1;

        let f = current.breakdown.total;
        let mut alpha = 1.0;
        let mut accepted = None;
        while evaluations < cfg.max_evals {
            let mut trial = clamp(&(&x + &d * alpha), &lo, &hi);
            if alpha == 1.0 {
                // Land exactly on bounds the QP step made active.
                for i in 0..trial.len() {
                    if d[i] == hi[i] - x[i] {
                        trial[i] = hi[i];
                    } else if d[i] == lo[i] - x[i] {
                        trial[i] = lo[i];
                    }
                }
            }
            evaluations += 1;
            if let Ok(eval) = objective_with_gradient(&trial, ctx) {
                let ft = eval.breakdown.total;
                if ft.is_finite() && ft <= f + ARMIJO * alpha * slope {
                    accepted = Some((trial, eval));
                    break;
                }
                // Safeguarded quadratic interpolation of the backtracking step.
                let denom = 2.0 * (ft - f - alpha * slope);
                let next = if denom > 0.0 && ft.is_finite() { -slope * alpha * alpha / denom } else { 0.5 * alpha };
                alpha = next.clamp(0.1 * alpha, 0.5 * alpha);
            } else {
                alpha *= 0.5;
            }
            if alpha * d.amax() < 1e-14 {
                break;
            }
        }
        let Some((trial, eval)) = accepted else {
            termination = if evaluations >= cfg.max_evals { Termination::MaxEvals } else { Termination::Stalled };
            break;
        };
        let s = &trial - &x;
        let y = &eval.gradient - &current.gradient;
        bfgs_update(&mut b, &s, &y);
        let change = (f - eval.breakdown.total).abs();
        x = trial;
        current = eval;
        if change < cfg.ftol {
            termination = Termination::Ftol;
            break;
        }
    }

    Ok(ConstrainedSolution {
        q: x,
        report: SolveReport {
            iterations,
            evaluations,
            initial_total,
            final_total: current.breakdown.total,
            termination,
            seed_clamped,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::KinematicChain;
    use crate::optimizer::{objective, SolverConfig};
    use crate::placement::FeatureState;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn feature_for(chain: &KinematicChain, q: &JointVector) -> FeatureState {
        let cam = chain.forward_kinematics(q).unwrap();
        FeatureState::from_position_normal(cam.translation() + cam.z_axis() * 0.11, -cam.z_axis(), &Vector3::z_axis()).unwrap()
    }

    #[test]
    fn stationary_seed_is_kept() {
        let chain = KinematicChain::default_rcm();
        let q = chain.home().clone();
        let feature = feature_for(&chain, &q);
        let cfg = SolverConfig::default();
        let ctx = ObjectiveContext {
            chain: &chain,
            feature: &feature,
            target: *chain.forward_kinematics(&q).unwrap().translation(),
            world_up: Vector3::z_axis(),
            config: &cfg,
        };
        let sol = solve_constrained_ik(&q, &ctx).unwrap();
        assert!((sol.report.final_total - sol.report.initial_total).abs() < cfg.ftol);
        assert!((&sol.q - &q).amax() < 1e-3);
        assert_eq!(sol.report.termination, Termination::Ftol);
    }

    #[test]
    fn out_of_bounds_seed_is_clamped() {
        let chain = KinematicChain::default_rcm();
        let mut seed = chain.home().clone();
        seed[0] = 10.0;
        let feature = feature_for(&chain, chain.home());
        let cfg = SolverConfig::default();
        let ctx = ObjectiveContext {
            chain: &chain,
            feature: &feature,
            target: *chain.forward_kinematics(chain.home()).unwrap().translation(),
            world_up: Vector3::z_axis(),
            config: &cfg,
        };
        let sol = solve_constrained_ik(&seed, &ctx).unwrap();
        assert!(sol.report.seed_clamped);
        assert!(chain.within_joint_limits(&sol.q).unwrap());
        let clamped = chain.clamp(&seed);
        assert!(sol.report.final_total <= objective(&clamped, &ctx).unwrap().total);
    }

    #[test]
    fn rejects_invalid_config() {
        let chain = KinematicChain::default_rcm();
        let feature = feature_for(&chain, chain.home());
        let cfg = SolverConfig { max_evals: 0, ..SolverConfig::default() };
        let ctx = ObjectiveContext {
            chain: &chain,
            feature: &feature,
            target: Vector3::zeros(),
            world_up: Vector3::z_axis(),
            config: &cfg,
        };
        assert!(solve_constrained_ik(chain.home(), &ctx).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn bounded_and_monotone(u in proptest::collection::vec(0.0..1.0f64, 6),
                                v in proptest::collection::vec(0.0..1.0f64, 6),
                                t in proptest::collection::vec(-0.08..0.08f64, 3)) {
            let chain = KinematicChain::default_rcm();
            let lerp = |w: &[f64]| JointVector::from_iterator(6, (0..6).map(|i| chain.lower()[i] + w[i] * (chain.upper()[i] - chain.lower()[i])));
            let q_seed = lerp(&u);
            let q_goal = lerp(&v);
            let feature = feature_for(&chain, &q_goal);
            let cfg = SolverConfig::default();
            let target = chain.forward_kinematics(&q_goal).unwrap().translation() + Vector3::from_vec(t);
            let ctx = ObjectiveContext { chain: &chain, feature: &feature, target, world_up: Vector3::z_axis(), config: &cfg };
            let sol = solve_constrained_ik(&q_seed, &ctx).unwrap();
            for i in 0..6 {
                prop_assert!(sol.q[i] >= chain.lower()[i] && sol.q[i] <= chain.upper()[i]);
            }
            prop_assert!(sol.report.evaluations <= cfg.max_evals);
            let f_seed = objective(&q_seed, &ctx).unwrap().total;
            let f_star = objective(&sol.q, &ctx).unwrap().total;
            prop_assert!(f_star <= f_seed + 1e-12);
            prop_assert_eq!(f_star, sol.report.final_total);
        }
    }
}
