use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::landmarks::HumanAngles;
use crate::error::{Error, Result};
use crate::linkage::{coupling_curvature, coupling_slope, coupling_value};
use crate::model::{FingerName, HandModel, JointDrive, ACTUATED_COUNT};
use crate::optimize::minimize_on_interval;

const FIT_GRID: usize = 64;

/// `robot = scale * human + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl Default for AffineMap {
    fn default() -> Self {
        Self { scale: 1.0, offset: 0.0 }
    }
}

impl AffineMap {
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetargetConfig {
    /// EMA coefficient in (0, 1]; 1 disables smoothing.
    pub alpha: f64,
    /// Per-joint velocity limit (rad/s).
    pub max_velocity: f64,
    /// Weight in [0, 1] of the DIP term when choosing the robot PIP angle.
    pub coupling_weight: f64,
    /// Per actuated joint id; joints not listed use the identity.
    pub affine: BTreeMap<String, AffineMap>,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        Self { alpha: 0.4, max_velocity: 8.0, coupling_weight: 0.5, affine: BTreeMap::new() }
    }
}

impl RetargetConfig {
    /// Checks the ranges and, when a model is given, that every affine entry
    /// names one of its actuated joints.
    pub fn validate(&self, model: Option<&HandModel>) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::validation("alpha", "must lie in (0, 1]"));
        }
        if !(self.max_velocity > 0.0) || !self.max_velocity.is_finite() {
            return Err(Error::validation("max_velocity", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.coupling_weight) {
            return Err(Error::validation("coupling_weight", "must lie in [0, 1]"));
        }
        for (id, map) in &self.affine {
            if !map.scale.is_finite() || !map.offset.is_finite() {
                return Err(Error::validation(format!("affine.{id}"), "non-finite coefficient"));
            }
            if let Some(model) = model {
                if model.channel_of(id).is_none() {
                    return Err(Error::Unknown { kind: "actuated joint", name: id.clone() });
                }
            }
        }
        Ok(())
    }

    fn affine_for(&self, id: &str) -> AffineMap {
        self.affine.get(id).copied().unwrap_or_default()
    }
}

/// `(value, slope, curvature)` of a passive joint as a function of its
/// driver.
#[derive(Debug, Clone, Copy)]
enum PassiveLaw {
    Coupled(f64),
    Ratio(f64),
}

impl PassiveLaw {
    fn eval(self, x: f64) -> (f64, f64, f64) {
        match self {
            PassiveLaw::Coupled(k) => (coupling_value(k, x), coupling_slope(k, x), coupling_curvature(k, x)),
            PassiveLaw::Ratio(r) => (r * x, r, 0.0),
        }
    }
}

/// Driver angle in `[lo, hi]` minimizing
/// `(1 - w)(x - target)² + w(passive(x) - passive_target)²`.
///
/// Missing (`NaN`) inputs drop their term; `None` when both are missing.
fn fit_driver(law: PassiveLaw, target: f64, passive_target: f64, w: f64, lo: f64, hi: f64) -> Option<f64> {
    let w = match (target.is_nan(), passive_target.is_nan()) {
        (true, true) => return None,
        (true, false) => 1.0,
        (false, true) => 0.0,
        (false, false) => w,
    };
    // A dropped term must not leak NaN through a zero weight.
    let target = if target.is_nan() { 0.0 } else { target };
    let passive_target = if passive_target.is_nan() { 0.0 } else { passive_target };
    if w == 0.0 {
        return Some(target.clamp(lo, hi));
    }
    let objective = |x: f64| {
        let (c, c1, c2) = law.eval(x);
        let (e0, e1) = (x - target, c - passive_target);
        let a = 1.0 - w;
        (a * e0 * e0 + w * e1 * e1, 2.0 * (a * e0 + w * e1 * c1), 2.0 * (a + w * (c1 * c1 + e1 * c2)))
    };
    Some(minimize_on_interval(objective, lo, hi, FIT_GRID).x)
}

/// Robot actuated angles for `human`, clamped into the joint limits.
///
/// Joints whose human angle is missing take the value from `fallback`.
pub fn human_to_robot_with_fallback(
    model: &HandModel,
    human: &HumanAngles,
    cfg: &RetargetConfig,
    fallback: &[f64; ACTUATED_COUNT],
) -> [f64; ACTUATED_COUNT] {
    let h = human.values();
    let mut out = *fallback;
    for finger in FingerName::ALL {
        let drives = model.finger_drives(finger);
        let spec = model.finger(finger);
        // Passive joint (law, full index) hanging off each joint, if any.
        let mut passive = vec![None; drives.len()];
        for &(drive, idx) in drives {
            match drive {
                JointDrive::Coupled { driver, linkage } => {
                    passive[driver] = Some((PassiveLaw::Coupled(linkage.k()), idx))
                }
                JointDrive::FixedRatio { driver, ratio } => passive[driver] = Some((PassiveLaw::Ratio(ratio), idx)),
                JointDrive::Actuated { .. } => {}
            }
        }
        for (j, &(drive, idx)) in drives.iter().enumerate() {
            let JointDrive::Actuated { channel } = drive else {
                continue;
            };
            let joint = &spec.joints[j];
            let target = cfg.affine_for(&joint.id).apply(h[idx]);
            let value = match passive[j] {
                Some((law, p)) => fit_driver(law, target, h[p], cfg.coupling_weight, joint.min(), joint.max()),
                None => (!target.is_nan()).then(|| joint.clamp(target)),
            };
            if let Some(v) = value {
                out[channel] = v;
            }
        }
    }
    out
}

/// Robot actuated angles for `human`; missing human angles map to the
/// joint's zero pose.
pub fn human_to_robot(model: &HandModel, human: &HumanAngles, cfg: &RetargetConfig) -> [f64; ACTUATED_COUNT] {
    human_to_robot_with_fallback(model, human, cfg, &model.zero_pose())
}
