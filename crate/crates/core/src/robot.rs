//! Discrete differential-drive surrogate: each decision turns by a fixed
//! angle and then advances a fixed distance along the new heading.

use serde::{Deserialize, Serialize};

use crate::controller::SteerDecision;

/// Position in centimetres, heading in degrees in `(-180, 180]`, measured
/// anticlockwise from the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_degrees(theta),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite() && self.theta > -180.0 && self.theta <= 180.0
    }
}

/// Wrap an angle into `(-180, 180]`.
pub fn normalize_degrees(theta: f64) -> f64 {
    let a = theta.rem_euclid(360.0);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    /// Forward travel per moving decision, cm.
    pub step_length: f64,
    /// Turn per moving decision, degrees.
    pub turn_angle: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            step_length: 1.2,
            turn_angle: 3.0,
        }
    }
}

impl MotionConfig {
    pub fn is_valid(&self) -> bool {
        self.step_length.is_finite() && self.step_length >= 0.0 && self.turn_angle > 0.0 && self.turn_angle < 180.0
    }
}

/// Turn first, then translate. `Stay` leaves the pose untouched.
pub fn apply(pose: &Pose, decision: SteerDecision, motion: &MotionConfig) -> Pose {
    let turn = match decision {
        SteerDecision::Stay => return *pose,
        SteerDecision::Left => motion.turn_angle,
        SteerDecision::Right => -motion.turn_angle,
    };
    let theta = normalize_degrees(pose.theta + turn);
    let (sin, cos) = theta.to_radians().sin_cos();
    Pose {
        x: pose.x + motion.step_length * cos,
        y: pose.y + motion.step_length * sin,
        theta,
    }
}

/// Left fold of [`apply`]; the result starts with `start` and has one pose
/// per decision after it.
pub fn trajectory(start: Pose, decisions: &[SteerDecision], motion: &MotionConfig) -> Vec<Pose> {
    let mut poses = Vec::with_capacity(decisions.len() + 1);
    poses.push(start);
    let mut current = start;
    for &d in decisions {
        current = apply(&current, d, motion);
        poses.push(current);
    }
    poses
}

/// Net signed heading change along a decision sequence, degrees
/// (positive = anticlockwise).
pub fn net_turn(decisions: &[SteerDecision], motion: &MotionConfig) -> f64 {
    decisions
        .iter()
        .map(|d| match d {
            SteerDecision::Left => motion.turn_angle,
            SteerDecision::Right => -motion.turn_angle,
            SteerDecision::Stay => 0.0,
        })
        .sum()
}
