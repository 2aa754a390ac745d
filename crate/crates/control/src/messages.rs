//! Websocket message schema, version [`SCHEMA_VERSION`].
//!
//! Every message is a JSON object tagged by `"type"`. Clients send
//! `set_joint`, `set_mode`, `grasp` and `landmarks`; the server sends `state`
//! at the broadcast rate and `error` in reply to a message it could not
//! apply. See `docs/websocket.md` for examples.

use serde::{Deserialize, Serialize};

use crate::controller::ModeName;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    /// Joint-level command for one channel (rad).
    SetJoint { channel: usize, rad: f64 },
    SetMode {
        mode: ModeName,
        #[serde(default)]
        params: ModeParams,
    },
    /// Task-based move to a library grasp over `duration` seconds.
    Grasp { id: u32, duration: f64 },
    /// One landmark frame: 63 coordinates, point-major.
    Landmarks { timestamp: f64, points: Vec<f64> },
}

/// Optional payload of `set_mode`.
///
/// `joint_level` takes an optional `target` (16 angles; default: hold the
/// current pose). `task_based` takes `duration` and either `target` or
/// `grasp`. `shadow` takes nothing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grasp: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub schema_version: u32,
    /// Control steps since start.
    pub tick: u64,
    /// Controller clock (s).
    pub time: f64,
    pub mode: ModeName,
    /// Measured angles in channel order, or the command when the device
    /// reports nothing (rad).
    pub actuated: Vec<f64>,
    /// Last command sent to the device (rad).
    pub commanded: Vec<f64>,
    /// All 21 joints, coupled ones included (rad).
    pub full: Vec<f64>,
    /// Fingertips, thumb first (m).
    pub tips: Vec<[f64; 3]>,
    /// Per finger, thumb first: the root, the start of each segment and the
    /// tip (m).
    pub skeleton: Vec<Vec<[f64; 3]>>,
    /// Channels whose requested value lay outside the limits.
    pub limits_hit: Vec<bool>,
    /// Trajectory progress in `[0, 1]` in task-based mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub progress: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    State(StateMessage),
    Error { schema_version: u32, message: String },
}

impl Outbound {
    pub fn error(message: impl Into<String>) -> Self {
        Outbound::Error { schema_version: SCHEMA_VERSION, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound messages serialize")
    }
}

/// Parses one client message; the error text is suitable for an `error` reply.
pub fn parse_inbound(text: &str) -> Result<Inbound, String> {
    serde_json::from_str(text).map_err(|e| format!("malformed message (schema version {SCHEMA_VERSION}): {e}"))
}
