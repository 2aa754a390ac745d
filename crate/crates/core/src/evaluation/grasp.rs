use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kinematics::forward_kinematics;
use crate::model::{resolve_full_state, HandModel, ACTUATED_COUNT, FULL_COUNT};

pub const GRASP_LIBRARY_VERSION: u32 = 1;
pub const TAXONOMY_SIZE: u32 = 33;

pub const DEFAULT_GRASPS_JSON: &str = include_str!("../../data/grasps.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspPose {
    /// Taxonomy class, 1 to 33.
    pub id: u32,
    pub name: String,
    /// Actuated angles in channel order (rad).
    pub actuated: [f64; ACTUATED_COUNT],
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspLibrary {
    pub format_version: u32,
    pub poses: Vec<GraspPose>,
}

impl GraspLibrary {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let lib: GraspLibrary = serde_json::from_str(text)?;
        if lib.format_version != GRASP_LIBRARY_VERSION {
            return Err(Error::validation("format_version", format!("unsupported version {}", lib.format_version)));
        }
        Ok(lib)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json_str(&text)
    }

    /// The library authored for the default model.
    pub fn default_library() -> Self {
        Self::from_json_str(DEFAULT_GRASPS_JSON).expect("shipped grasp library parses")
    }

    pub fn pose(&self, id: u32) -> Option<&GraspPose> {
        self.poses.iter().find(|p| p.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitViolation {
    pub joint: String,
    pub channel: usize,
    pub value: f64,
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraspVerdict {
    pub id: u32,
    pub name: String,
    pub valid: bool,
    pub violations: Vec<LimitViolation>,
    /// Full joint vector after clamping and coupling resolution.
    pub full: [f64; FULL_COUNT],
    /// Fingertips at the resolved state, thumb first (m).
    pub tips: [[f64; 3]; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraspReport {
    pub valid_count: usize,
    pub total: usize,
    pub poses: Vec<GraspVerdict>,
}

fn check_pose(model: &HandModel, pose: &GraspPose) -> Result<GraspVerdict> {
    let mut violations = Vec::new();
    for (c, &v) in pose.actuated.iter().enumerate() {
        let j = model.channel_joint(c);
        if !v.is_finite() || v < j.min() || v > j.max() {
            violations.push(LimitViolation { joint: j.id.clone(), channel: c, value: v, limits: j.limits });
        }
    }
    let state = resolve_full_state(model, &pose.actuated)?;
    let tips = forward_kinematics(model, &state).tips().tips;
    Ok(GraspVerdict {
        id: pose.id,
        name: pose.name.clone(),
        valid: violations.is_empty(),
        violations,
        full: *state.full(),
        tips,
    })
}

/// Checks every pose against the model's limits and resolves its coupled
/// joints and fingertips. Verdicts keep the library order.
pub fn validate_grasp_library(model: &HandModel, library: &[GraspPose], exec: Execution) -> Result<GraspReport> {
    if library.is_empty() {
        return Err(Error::Empty("grasp library"));
    }
    let mut seen = BTreeSet::new();
    for p in library {
        if !(1..=TAXONOMY_SIZE).contains(&p.id) {
            return Err(Error::validation(format!("poses[id={}]", p.id), "id must lie in 1..=33"));
        }
        if !seen.insert(p.id) {
            return Err(Error::validation(format!("poses[id={}]", p.id), "duplicate id"));
        }
    }
    let poses = exec.map(library, |p| check_pose(model, p)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(GraspReport { valid_count: poses.iter().filter(|v| v.valid).count(), total: poses.len(), poses })
}
