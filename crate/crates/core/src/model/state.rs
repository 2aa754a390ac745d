use serde::{Deserialize, Serialize};

use super::{HandModel, JointDrive, ACTUATED_COUNT, FULL_COUNT};
use crate::error::{Error, Result};
use crate::linkage::coupling_value;

/// Actuated joint angles in channel order plus the derived 21-joint state.
///
/// Only constructible through [`resolve_full_state`], so `full` is always the
/// coupling image of `actuated`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    actuated: [f64; ACTUATED_COUNT],
    full: [f64; FULL_COUNT],
    #[serde(skip)]
    limits_hit: [bool; ACTUATED_COUNT],
}

impl JointState {
    pub fn actuated(&self) -> &[f64; ACTUATED_COUNT] {
        &self.actuated
    }

    pub fn full(&self) -> &[f64; FULL_COUNT] {
        &self.full
    }

    /// Channels whose input was clamped while resolving this state.
    pub fn limits_hit(&self) -> &[bool; ACTUATED_COUNT] {
        &self.limits_hit
    }
}

/// Clamps `actuated` into the joint limits and resolves the passive joints.
pub fn resolve_full_state(model: &HandModel, actuated: &[f64]) -> Result<JointState> {
    if actuated.len() != ACTUATED_COUNT {
        return Err(Error::Mismatch { what: "actuated vector", expected: ACTUATED_COUNT, got: actuated.len() });
    }
    if actuated.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("actuated vector"));
    }
    let raw: [f64; ACTUATED_COUNT] = actuated.try_into().expect("length checked");
    let (clamped, limits_hit) = model.clamp_actuated(&raw);

    let mut full = [0.0; FULL_COUNT];
    for finger in super::FingerName::ALL {
        let drives = model.finger_drives(finger);
        for &(drive, idx) in drives {
            full[idx] = match drive {
                JointDrive::Actuated { channel } => clamped[channel],
                JointDrive::Coupled { driver, linkage } => {
                    // Driver limits lie within [0, pi) by model validation.
                    coupling_value(linkage.k(), full[drives[driver].1])
                }
                JointDrive::FixedRatio { driver, ratio } => ratio * full[drives[driver].1],
            };
        }
    }
    Ok(JointState { actuated: clamped, full, limits_hit })
}
