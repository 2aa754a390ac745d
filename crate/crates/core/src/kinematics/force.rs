use nalgebra::{Matrix3xX, Vector3};
use serde::Serialize;

use super::chain::jacobian_at;
use crate::error::{Error, Result};
use crate::model::{FingerName, HandModel, JointState};

/// Jacobian-transpose entries at or below this magnitude are treated as zero.
pub const NULL_DIRECTION_EPS: f64 = 1e-9;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceLimit {
    /// Largest force (N) along the direction whose joint torques all stay
    /// within their limits; `limiting_joint` is the column that saturates.
    Bounded { force: f64, limiting_joint: usize },
    /// The direction is in the null space of `Jᵀ`: no joint resists it, so
    /// this model places no bound.
    Unbounded,
}

impl ForceLimit {
    /// The bound in newtons, `f64::INFINITY` when unbounded.
    pub fn value(&self) -> f64 {
        match self {
            ForceLimit::Bounded { force, .. } => *force,
            ForceLimit::Unbounded => f64::INFINITY,
        }
    }
}

/// `min_i τ_i / |(Jᵀ d)_i|` over the columns with `|(Jᵀ d)_i| > eps`.
pub fn force_limit(
    jacobian: &Matrix3xX<f64>,
    torque_limits: &[f64],
    direction: &Vector3<f64>,
    eps: f64,
) -> Result<ForceLimit> {
    if torque_limits.len() != jacobian.ncols() {
        return Err(Error::Mismatch { what: "torque limits", expected: jacobian.ncols(), got: torque_limits.len() });
    }
    if (direction.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::validation("direction", "must be a unit vector"));
    }
    let per_unit = jacobian.transpose() * direction;
    let mut best = ForceLimit::Unbounded;
    for (i, (&lever, &tau)) in per_unit.iter().zip(torque_limits).enumerate() {
        if lever.abs() <= eps {
            continue;
        }
        let f = tau / lever.abs();
        if f < best.value() {
            best = ForceLimit::Bounded { force: f, limiting_joint: i };
        }
    }
    Ok(best)
}

/// Largest static fingertip force along `direction` that the finger's
/// tendon-driven joints can hold at `state`.
///
/// Joint torque limits are `servo_torque_limit * joint_pulley_radius /
/// servo_pulley_radius`. In the result, `limiting_joint` indexes the finger's
/// actuated joints root to tip.
pub fn max_fingertip_force(
    model: &HandModel,
    state: &JointState,
    finger: FingerName,
    direction: &Vector3<f64>,
) -> Result<ForceLimit> {
    let jac = jacobian_at(model, finger, state.full());
    let limits: Vec<f64> =
        model.finger_channels(finger).into_iter().map(|c| model.actuation(c).joint_torque_limit()).collect();
    force_limit(&jac, &limits, direction, NULL_DIRECTION_EPS)
}
