//! Per-tick camera controller: naive placement, workspace resolution,
//! Cartesian and joint-space interpolation, Newton IK, and the constrained
//! solver as a fallback.

mod interpolation;

pub use interpolation::{interpolate_cartesian, quintic_joint_trajectory, JointSample, QuinticTrajectory};

use std::fmt;
use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{unit, Pose, UnitVector3};
use crate::kinematics::{ik_newton_with, JointVector, KinematicChain, KinematicsError, NewtonConfig};
use crate::optimizer::{objective, solve_constrained_ik, ObjectiveBreakdown, ObjectiveContext, SolveReport, SolverConfig};
use crate::placement::{check_orientation_side, compute_naive_pose_with_fallback, look_at_with_fallback, FeatureState, PlacementConfig};
use crate::workspace::{proximity_violated, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    NoGoZone,
    BelowFloor,
    Proximity,
    JointLimit,
    SideOrientation,
}

impl Constraint {
    pub const ALL: [Constraint; 5] = [
        Constraint::NoGoZone,
        Constraint::BelowFloor,
        Constraint::Proximity,
        Constraint::JointLimit,
        Constraint::SideOrientation,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Constraint::NoGoZone => "no_go_zone",
            Constraint::BelowFloor => "below_floor",
            Constraint::Proximity => "proximity",
            Constraint::JointLimit => "joint_limit",
            Constraint::SideOrientation => "side_orientation",
        }
    }

    fn bit(&self) -> u8 {
        1 << (*self as u8)
    }
}

/// Small set of [`Constraint`]s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConstraintSet(u8);

impl ConstraintSet {
    pub fn insert(&mut self, c: Constraint) {
        self.0 |= c.bit();
    }

    pub fn contains(&self, c: Constraint) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Constraint> + '_ {
        Constraint::ALL.into_iter().filter(|c| self.contains(*c))
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> Self {
        let mut set = ConstraintSet::default();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverUsed {
    Newton,
    Constrained,
}

impl fmt::Display for SolverUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverUsed::Newton => "newton",
            SolverUsed::Constrained => "constrained",
        })
    }
}

/// What to do when the target view comes from outside the preferred side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidePolicy {
    /// Record the violation only.
    #[default]
    Log,
    /// Also route the tick through the constrained solver.
    Constrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub rate_hz: f64,
    /// Largest Cartesian camera step per tick, meters.
    pub cartesian_step_limit: f64,
    /// Joint-space speed used to size each quintic segment.
    pub max_joint_speed: f64,
    /// Proximity threshold, meters.
    pub min_distance: f64,
    pub side_policy: SidePolicy,
    pub newton: NewtonConfig,
    /// Extra clearance used when the safety stage pushes a command out of
    /// the workspace obstacles.
    pub safety_margin: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            rate_hz: 100.0,
            cartesian_step_limit: 0.015,
            max_joint_speed: 0.5,
            min_distance: 0.08,
            side_policy: SidePolicy::Log,
            newton: NewtonConfig::default(),
            safety_margin: 1e-6,
        }
    }
}

impl ControllerConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err("rate_hz must be positive".into());
        }
        if !(self.cartesian_step_limit > 0.0) || !(self.max_joint_speed > 0.0) || !(self.min_distance > 0.0) {
            return Err("step limit, joint speed and minimum distance must be positive".into());
        }
        if !(self.safety_margin >= 0.0) {
            return Err("safety_margin must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    pub q_current: JointVector,
    pub q_velocity: JointVector,
    pub q_acceleration: JointVector,
    pub last_valid_x_axis: UnitVector3,
    pub tick_index: u64,
    pub rng_seed: u64,
}

impl ControllerState {
    /// At rest at `q`. The fallback x-axis starts as the camera's current one.
    pub fn at_rest(chain: &KinematicChain, q: JointVector, rng_seed: u64) -> Result<Self, KinematicsError> {
        let pose = chain.forward_kinematics(&q)?;
        let n = q.len();
        Ok(Self {
            last_valid_x_axis: unit(&pose.x_axis()).unwrap_or(Vector3::x_axis()),
            q_current: q,
            q_velocity: JointVector::zeros(n),
            q_acceleration: JointVector::zeros(n),
            tick_index: 0,
            rng_seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickReport {
    pub tick: u64,
    pub naive_pose: Pose,
    /// The naive pose after workspace resolution.
    pub target_pose: Pose,
    /// The target after the Cartesian step gate.
    pub setpoint_pose: Pose,
    /// Forward kinematics of `q_command`.
    pub commanded_pose: Pose,
    pub q_command: JointVector,
    pub constraints_hit: ConstraintSet,
    pub solver_used: SolverUsed,
    /// Why Newton was rejected, if it failed outright.
    pub newton_failure: Option<&'static str>,
    pub solve_report: Option<SolveReport>,
    /// The view was vertical and the previous x-axis was reused.
    pub used_fallback_x: bool,
    /// The safety stage had to move or hold the command.
    pub safety_override: bool,
    /// Objective of `q_command` against the setpoint.
    pub objective: Option<ObjectiveBreakdown>,
    /// Wall-clock seconds spent in the tick.
    pub loop_time: f64,
}

/// Everything a tick needs besides the evolving state.
#[derive(Clone, Debug)]
pub struct Controller {
    pub chain: KinematicChain,
    pub workspace: Workspace,
    pub placement: PlacementConfig,
    pub solver: SolverConfig,
    pub config: ControllerConfig,
}

impl Controller {
    fn aim(&self, position: &Vector3<f64>, feature: &FeatureState, last_x: &Vector3<f64>) -> Option<Pose> {
        look_at_with_fallback(position, feature.translation(), &self.placement.world_up, last_x)
            .ok()
            .map(|(p, _)| p)
    }

    fn context<'a>(&'a self, feature: &'a FeatureState, target: &Vector3<f64>) -> ObjectiveContext<'a> {
        ObjectiveContext {
            chain: &self.chain,
            feature,
            target: *target,
            world_up: self.placement.world_up,
            config: &self.solver,
        }
    }

    /// Runs one control cycle. Never fails: anomalies are reported as flags
    /// and the worst case holds the current joints.
    ///
    /// # Panics
    /// If `state` has the wrong dimension for the chain.
    pub fn tick(&self, state: &ControllerState, feature: &FeatureState) -> (ControllerState, TickReport) {
        let started = Instant::now();
        let chain = &self.chain;
        let cfg = &self.config;
        let dt = cfg.dt();
        let q_current = &state.q_current;
        let current_pose = chain
            .forward_kinematics(q_current)
            .expect("controller state must match the chain dimension");
        let last_x = state.last_valid_x_axis.into_inner();
        let mut constraints = ConstraintSet::default();

        // Naive placement.
        let (naive_pose, used_fallback_x) = compute_naive_pose_with_fallback(feature, &self.placement, &last_x)
            .unwrap_or((current_pose, false));

        // Workspace resolution.
        let resolution = self.workspace.resolve(naive_pose.translation());
        let mut target_pose = naive_pose;
        if resolution.in_zone {
            constraints.insert(Constraint::NoGoZone);
        }
        if resolution.below_floor {
            constraints.insert(Constraint::BelowFloor);
        }
        if resolution.in_zone || resolution.below_floor {
            target_pose = self.aim(&resolution.point, feature, &last_x).unwrap_or(naive_pose.with_translation(resolution.point));
        }

        // Recorded constraints.
        if proximity_violated(target_pose.translation(), feature, cfg.min_distance) {
            constraints.insert(Constraint::Proximity);
        }
        let side_ok = check_orientation_side(&target_pose, &self.placement);
        if !side_ok {
            constraints.insert(Constraint::SideOrientation);
        }

        // Cartesian step gate; a straight step may still cut through an obstacle.
        let mut setpoint_pose = interpolate_cartesian(&current_pose, &target_pose, cfg.cartesian_step_limit);
        if self.workspace.violated(setpoint_pose.translation()) {
            let r = self.workspace.resolve(setpoint_pose.translation());
            if r.in_zone {
                constraints.insert(Constraint::NoGoZone);
            }
            if r.below_floor {
                constraints.insert(Constraint::BelowFloor);
            }
            setpoint_pose = self.aim(&r.point, feature, &last_x).unwrap_or(setpoint_pose.with_translation(r.point));
        }

        // Newton first, constrained solve when it fails or leaves the limits.
        let newton = ik_newton_with(chain, &setpoint_pose, q_current, &cfg.newton);
        let mut newton_failure = None;
        let mut solver_used = SolverUsed::Newton;
        let mut solve_report = None;
        let needs_fallback = match &newton {
            Ok(sol) => {
                let inside = chain.within_joint_limits(&sol.q).unwrap_or(false);
                if !inside {
                    constraints.insert(Constraint::JointLimit);
                }
                !inside || (!side_ok && cfg.side_policy == SidePolicy::Constrained)
            }
            Err(e) => {
                newton_failure = Some(e.label());
                true
            }
        };
        let mut q_goal = match &newton {
            Ok(sol) => sol.q.clone(),
            Err(_) => q_current.clone(),
        };
        if needs_fallback {
            solver_used = SolverUsed::Constrained;
            let ctx = self.context(feature, setpoint_pose.translation());
            match solve_constrained_ik(q_current, &ctx) {
                Ok(sol) => {
                    q_goal = sol.q;
                    solve_report = Some(sol.report);
                }
                Err(_) => q_goal = chain.clamp(q_current),
            }
        }

        // Joint-space quintic toward the goal, re-planned every tick.
        let distance = (&q_goal - q_current).norm();
        let duration = (distance / cfg.max_joint_speed).max(dt);
        let trajectory = quintic_joint_trajectory(q_current, &state.q_velocity, &state.q_acceleration, &q_goal, duration);
        let JointSample {
            q: mut q_command,
            velocity: mut q_velocity,
            acceleration: mut q_acceleration,
        } = trajectory.evaluate(dt);
        for i in 0..q_command.len() {
            let clamped = q_command[i].clamp(chain.lower()[i], chain.upper()[i]);
            if clamped != q_command[i] {
                q_command[i] = clamped;
                q_velocity[i] = 0.0;
                q_acceleration[i] = 0.0;
            }
        }

        // Safety: the command itself must stay outside every obstacle.
        let mut commanded_pose = chain.forward_kinematics(&q_command).expect("dimension checked");
        let mut safety_override = false;
        if self.workspace.violated(commanded_pose.translation()) {
            safety_override = true;
            let pushed = self.push_out(&q_command, &commanded_pose, feature, &last_x);
            match pushed {
                Some(q) => q_command = q,
                None => q_command = chain.clamp(q_current),
            }
            q_velocity.fill(0.0);
            q_acceleration.fill(0.0);
            commanded_pose = chain.forward_kinematics(&q_command).expect("dimension checked");
        }

        let objective = objective(&q_command, &self.context(feature, setpoint_pose.translation())).ok();
        let last_valid_x_axis = if used_fallback_x {
            state.last_valid_x_axis
        } else {
            unit(&naive_pose.x_axis()).unwrap_or(state.last_valid_x_axis)
        };
        let next = ControllerState {
            q_current: q_command.clone(),
            q_velocity,
            q_acceleration,
            last_valid_x_axis,
            tick_index: state.tick_index + 1,
            rng_seed: state.rng_seed,
        };
        let report = TickReport {
            tick: state.tick_index,
            naive_pose,
            target_pose,
            setpoint_pose,
            commanded_pose,
            q_command,
            constraints_hit: constraints,
            solver_used,
            newton_failure,
            solve_report,
            used_fallback_x,
            safety_override,
            objective,
            loop_time: started.elapsed().as_secs_f64().max(1e-9),
        };
        (next, report)
    }

    /// Re-solves a violating command onto the obstacle surface plus the
    /// safety margin. `None` when no admissible in-limit solution is found.
    fn push_out(&self, q: &JointVector, pose: &Pose, feature: &FeatureState, last_x: &Vector3<f64>) -> Option<JointVector> {
        let p = pose.translation();
        let resolved = self.workspace.resolve(p).point;
        let shift = resolved - p;
        let out = if shift.norm() > 0.0 {
            resolved + shift.normalize() * self.config.safety_margin.max(1e-9)
        } else {
            resolved
        };
        let target = self.aim(&out, feature, last_x).unwrap_or(pose.with_translation(out));
        let tight = NewtonConfig {
            tol: 1e-10,
            ..self.config.newton.clone()
        };
        let sol = ik_newton_with(&self.chain, &target, q, &tight).ok()?;
        let admissible = self.chain.within_joint_limits(&sol.q).ok()?
            && !self.workspace.violated(self.chain.forward_kinematics(&sol.q).ok()?.translation());
        admissible.then_some(sol.q)
    }
}
