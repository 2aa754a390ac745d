//! Hand description: joint topology, link lengths, limits, coupling and
//! actuation parameters.
//!
//! A model is loaded from a JSON document (see `docs/hand-format.md`) and is
//! immutable afterwards. Loading validates every invariant and builds the
//! lookup tables used by the rest of the crate: channel order of the 16
//! actuated joints and the 21-entry full-state order (fingers thumb, index,
//! middle, ring, little; joints root to tip).
//!
//! Angle convention: flexion 0 is straight, positive flexion curls toward the
//! palm; abduction is positive away from the middle finger.

mod state;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::{IsometryMatrix3, Rotation3, Translation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::AntiparallelogramLinkage;

pub use state::{resolve_full_state, JointState};

pub const FORMAT_VERSION: u32 = 1;
pub const ACTUATED_COUNT: usize = 16;
pub const PASSIVE_COUNT: usize = 5;
pub const FULL_COUNT: usize = ACTUATED_COUNT + PASSIVE_COUNT;
pub const FINGER_COUNT: usize = 5;

/// Segment id naming the finger root frame (zero length).
pub const ROOT_SEGMENT: &str = "root";

const AXIS_NORM_TOL: f64 = 1e-9;
const COUPLED_LIMIT_TOL: f64 = 1e-9;

static DEFAULT_MODEL_JSON: &str = include_str!("../../data/default_hand.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FingerName {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl FingerName {
    pub const ALL: [FingerName; FINGER_COUNT] =
        [FingerName::Thumb, FingerName::Index, FingerName::Middle, FingerName::Ring, FingerName::Little];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FingerName::Thumb => "thumb",
            FingerName::Index => "index",
            FingerName::Middle => "middle",
            FingerName::Ring => "ring",
            FingerName::Little => "little",
        }
    }

    /// Actuated joints each finger must carry.
    pub fn actuated_joints(self) -> usize {
        match self {
            FingerName::Thumb => 4,
            _ => 3,
        }
    }
}

impl fmt::Display for FingerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FingerName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FingerName::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Unknown { kind: "finger", name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Actuated,
    /// Driven through the finger's anti-parallelogram linkage.
    Coupled,
    /// Driven at a constant ratio of its driver.
    FixedRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub id: String,
    pub kind: JointKind,
    /// Unit rotation axis in the parent frame.
    pub axis: [f64; 3],
    /// `[min, max]` in radians.
    pub limits: [f64; 2],
    /// The joint sits at the distal end of this segment (`"root"` for the
    /// finger root).
    pub parent_segment: String,
    /// Driving actuated joint, for coupled and fixed-ratio joints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl JointSpec {
    pub fn axis_unit(&self) -> Unit<Vector3<f64>> {
        Unit::new_unchecked(Vector3::from(self.axis))
    }

    pub fn min(&self) -> f64 {
        self.limits[0]
    }

    pub fn max(&self) -> f64 {
        self.limits[1]
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.limits[0], self.limits[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub id: String,
    /// Meters.
    pub length: f64,
}

/// Pose of a finger root in the palm frame. Rotation is roll-pitch-yaw
/// (radians, applied as `Rz(yaw) * Ry(pitch) * Rx(roll)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootPose {
    pub translation: [f64; 3],
    pub rpy: [f64; 3],
}

impl RootPose {
    pub fn isometry(&self) -> IsometryMatrix3<f64> {
        let [r, p, y] = self.rpy;
        IsometryMatrix3::from_parts(
            Translation3::from(Vector3::from(self.translation)),
            Rotation3::from_euler_angles(r, p, y),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerModel {
    pub name: FingerName,
    pub root: RootPose,
    pub segments: Vec<Segment>,
    /// Ordered root to tip.
    pub joints: Vec<JointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<AntiparallelogramLinkage>,
}

impl FingerModel {
    pub fn segment_index(&self, id: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.id == id)
    }

    pub fn joint_index(&self, id: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.id == id)
    }

    /// Sum of segment lengths, the straight-finger reach from the root.
    pub fn reach(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationSpec {
    /// Meters.
    pub joint_pulley_radius: f64,
    /// Meters.
    pub servo_pulley_radius: f64,
    /// N·m.
    pub servo_torque_limit: f64,
}

impl ActuationSpec {
    /// Torque available at the joint through the tendon loop (N·m).
    pub fn joint_torque_limit(&self) -> f64 {
        self.servo_torque_limit * self.joint_pulley_radius / self.servo_pulley_radius
    }
}

/// On-disk layout of a hand description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandDescription {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    pub fingers: Vec<FingerModel>,
    pub actuation: BTreeMap<String, ActuationSpec>,
    pub wire_map: BTreeMap<String, usize>,
}

/// Location of a joint inside the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointRef {
    pub finger: usize,
    pub joint: usize,
}

/// How a joint's angle is obtained from the actuated vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointDrive {
    Actuated { channel: usize },
    Coupled { driver: usize, linkage: AntiparallelogramLinkage },
    FixedRatio { driver: usize, ratio: f64 },
}

/// Validated, immutable hand model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HandDescription", into = "HandDescription")]
pub struct HandModel {
    desc: HandDescription,
    channels: Vec<JointRef>,
    full: Vec<JointRef>,
    /// Per finger, per joint: drive and index into the full vector.
    drives: Vec<Vec<(JointDrive, usize)>>,
}

impl TryFrom<HandDescription> for HandModel {
    type Error = Error;

    fn try_from(desc: HandDescription) -> Result<Self> {
        HandModel::new(desc)
    }
}

impl From<HandModel> for HandDescription {
    fn from(m: HandModel) -> Self {
        m.desc
    }
}

/// Reads and validates a hand description file.
pub fn load_hand_model(path: impl AsRef<Path>) -> Result<HandModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    HandModel::from_json_str(&text)
}

impl HandModel {
    pub fn new(mut desc: HandDescription) -> Result<Self> {
        if desc.format_version != FORMAT_VERSION {
            return Err(Error::validation(
                "format_version",
                format!("unsupported version {} (expected {FORMAT_VERSION})", desc.format_version),
            ));
        }
        if desc.fingers.len() != FINGER_COUNT {
            return Err(Error::validation(
                "fingers",
                format!("expected {FINGER_COUNT} fingers, got {}", desc.fingers.len()),
            ));
        }
        desc.fingers.sort_by_key(|f| f.name);
        for (i, f) in desc.fingers.iter().enumerate() {
            if f.name != FingerName::ALL[i] {
                return Err(Error::validation(
                    "fingers",
                    "each of thumb, index, middle, ring, little must appear exactly once",
                ));
            }
        }

        let mut seen_ids = BTreeMap::new();
        for f in &desc.fingers {
            validate_finger(f)?;
            for j in &f.joints {
                if seen_ids.insert(j.id.clone(), f.name).is_some() {
                    return Err(Error::validation(
                        format!("fingers.{}.joints", f.name),
                        format!("duplicate joint id `{}`", j.id),
                    ));
                }
            }
        }

        let actuated: Vec<(usize, usize)> = desc
            .fingers
            .iter()
            .enumerate()
            .flat_map(|(fi, f)| {
                f.joints.iter().enumerate().filter(|(_, j)| j.kind == JointKind::Actuated).map(move |(ji, _)| (fi, ji))
            })
            .collect();
        let passive = desc.fingers.iter().map(|f| f.joints.len()).sum::<usize>() - actuated.len();
        if actuated.len() != ACTUATED_COUNT || passive != PASSIVE_COUNT {
            return Err(Error::validation(
                "fingers",
                format!(
                    "hand has {} actuated and {passive} coupled joints, expected {ACTUATED_COUNT} and {PASSIVE_COUNT}",
                    actuated.len()
                ),
            ));
        }

        // Actuation parameters.
        for &(fi, ji) in &actuated {
            let id = &desc.fingers[fi].joints[ji].id;
            let a = desc.actuation.get(id).ok_or_else(|| {
                Error::validation(format!("actuation.{id}"), "missing actuation entry for actuated joint")
            })?;
            for (name, v) in [
                ("joint_pulley_radius", a.joint_pulley_radius),
                ("servo_pulley_radius", a.servo_pulley_radius),
                ("servo_torque_limit", a.servo_torque_limit),
            ] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::validation(
                        format!("actuation.{id}.{name}"),
                        format!("must be positive, got {v}"),
                    ));
                }
            }
        }
        for id in desc.actuation.keys() {
            if !actuated.iter().any(|&(fi, ji)| &desc.fingers[fi].joints[ji].id == id) {
                return Err(Error::validation(format!("actuation.{id}"), "not an actuated joint"));
            }
        }

        // Wire map must be a bijection onto 0..16.
        let mut channels: Vec<Option<JointRef>> = vec![None; ACTUATED_COUNT];
        let mut channel_owner: Vec<Option<&str>> = vec![None; ACTUATED_COUNT];
        for (id, &ch) in &desc.wire_map {
            let Some(&(fi, ji)) = actuated.iter().find(|&&(fi, ji)| &desc.fingers[fi].joints[ji].id == id) else {
                return Err(Error::validation(format!("wire_map.{id}"), "not an actuated joint"));
            };
            if ch >= ACTUATED_COUNT {
                return Err(Error::validation(
                    format!("wire_map.{id}"),
                    format!("channel {ch} outside 0..{}", ACTUATED_COUNT - 1),
                ));
            }
            if let Some(prev) = channel_owner[ch] {
                return Err(Error::validation(
                    format!("wire_map.{id}"),
                    format!("channel {ch} assigned to both `{prev}` and `{id}`"),
                ));
            }
            channel_owner[ch] = Some(id);
            channels[ch] = Some(JointRef { finger: fi, joint: ji });
        }
        for &(fi, ji) in &actuated {
            let id = &desc.fingers[fi].joints[ji].id;
            if !desc.wire_map.contains_key(id) {
                return Err(Error::validation(format!("wire_map.{id}"), "actuated joint has no channel"));
            }
        }
        let channels: Vec<JointRef> = channels.into_iter().map(|c| c.expect("bijection checked")).collect();

        let mut full = Vec::with_capacity(FULL_COUNT);
        let mut drives = Vec::with_capacity(FINGER_COUNT);
        for (fi, f) in desc.fingers.iter().enumerate() {
            let mut finger_drives = Vec::with_capacity(f.joints.len());
            for (ji, j) in f.joints.iter().enumerate() {
                let full_index = full.len();
                full.push(JointRef { finger: fi, joint: ji });
                let drive = match j.kind {
                    JointKind::Actuated => JointDrive::Actuated { channel: desc.wire_map[&j.id] },
                    JointKind::Coupled => JointDrive::Coupled {
                        driver: f.joint_index(j.driver.as_deref().unwrap()).unwrap(),
                        linkage: f.coupling.unwrap(),
                    },
                    JointKind::FixedRatio => JointDrive::FixedRatio {
                        driver: f.joint_index(j.driver.as_deref().unwrap()).unwrap(),
                        ratio: j.ratio.unwrap(),
                    },
                };
                finger_drives.push((drive, full_index));
            }
            drives.push(finger_drives);
        }

        Ok(Self { desc, channels, full, drives })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let desc: HandDescription = serde_json::from_str(text)?;
        Self::new(desc)
    }

    /// The shipped default model.
    ///
    /// Its geometry uses average adult proportions and its limits and
    /// actuation are calibration values, not measurements of a physical hand.
    pub fn default_model() -> Self {
        Self::from_json_str(DEFAULT_MODEL_JSON).expect("shipped default model is valid")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.desc).expect("model serializes")
    }

    pub fn description(&self) -> &HandDescription {
        &self.desc
    }

    pub fn name(&self) -> &str {
        &self.desc.name
    }

    pub fn fingers(&self) -> &[FingerModel] {
        &self.desc.fingers
    }

    pub fn finger(&self, name: FingerName) -> &FingerModel {
        &self.desc.fingers[name.index()]
    }

    /// Joint driven by `channel`.
    pub fn channel_joint(&self, channel: usize) -> &JointSpec {
        let r = self.channels[channel];
        &self.desc.fingers[r.finger].joints[r.joint]
    }

    pub fn channel_ref(&self, channel: usize) -> JointRef {
        self.channels[channel]
    }

    pub fn channel_of(&self, joint_id: &str) -> Option<usize> {
        self.desc.wire_map.get(joint_id).copied()
    }

    pub fn actuation(&self, channel: usize) -> &ActuationSpec {
        &self.desc.actuation[&self.channel_joint(channel).id]
    }

    /// Joint at position `index` of the 21-entry full state.
    pub fn full_joint(&self, index: usize) -> &JointSpec {
        let r = self.full[index];
        &self.desc.fingers[r.finger].joints[r.joint]
    }

    pub fn full_ref(&self, index: usize) -> JointRef {
        self.full[index]
    }

    pub fn full_index_of(&self, joint_id: &str) -> Option<usize> {
        (0..FULL_COUNT).find(|&i| self.full_joint(i).id == joint_id)
    }

    /// Drive and full-state index for each joint of a finger.
    pub fn finger_drives(&self, finger: FingerName) -> &[(JointDrive, usize)] {
        &self.drives[finger.index()]
    }

    /// Channels of the actuated joints of `finger`, root to tip.
    pub fn finger_channels(&self, finger: FingerName) -> Vec<usize> {
        self.drives[finger.index()]
            .iter()
            .filter_map(|(d, _)| match d {
                JointDrive::Actuated { channel } => Some(*channel),
                _ => None,
            })
            .collect()
    }

    pub fn channel_limits(&self) -> [[f64; 2]; ACTUATED_COUNT] {
        std::array::from_fn(|c| self.channel_joint(c).limits)
    }

    /// Clamps an actuated vector into the joint limits, reporting which
    /// channels were limited.
    pub fn clamp_actuated(&self, q: &[f64; ACTUATED_COUNT]) -> ([f64; ACTUATED_COUNT], [bool; ACTUATED_COUNT]) {
        let mut hit = [false; ACTUATED_COUNT];
        let out = std::array::from_fn(|c| {
            let j = self.channel_joint(c);
            let v = j.clamp(q[c]);
            hit[c] = v != q[c];
            v
        });
        (out, hit)
    }

    /// Strict check that every actuated angle lies within its limits.
    pub fn validate_actuated(&self, q: &[f64]) -> Result<()> {
        if q.len() != ACTUATED_COUNT {
            return Err(Error::Mismatch { what: "actuated vector", expected: ACTUATED_COUNT, got: q.len() });
        }
        for (c, &v) in q.iter().enumerate() {
            let j = self.channel_joint(c);
            if !v.is_finite() {
                return Err(Error::validation(j.id.clone(), "non-finite angle"));
            }
            if v < j.min() || v > j.max() {
                return Err(Error::validation(
                    j.id.clone(),
                    format!("angle {v} outside limits [{}, {}]", j.min(), j.max()),
                ));
            }
        }
        Ok(())
    }

    /// Every channel at zero flexion/abduction, clamped into its limits.
    pub fn zero_pose(&self) -> [f64; ACTUATED_COUNT] {
        std::array::from_fn(|c| self.channel_joint(c).clamp(0.0))
    }
}

fn validate_finger(f: &FingerModel) -> Result<()> {
    let at = |what: &str| format!("fingers.{}.{what}", f.name);

    for (i, t) in f.root.translation.iter().chain(f.root.rpy.iter()).enumerate() {
        if !t.is_finite() {
            return Err(Error::validation(at("root"), format!("component {i} is not finite")));
        }
    }
    if f.segments.is_empty() {
        return Err(Error::validation(at("segments"), "at least one segment required"));
    }
    for (i, s) in f.segments.iter().enumerate() {
        if !(s.length.is_finite() && s.length > 0.0) {
            return Err(Error::validation(
                at(&format!("segments.{}", s.id)),
                format!("length must be positive, got {}", s.length),
            ));
        }
        if s.id == ROOT_SEGMENT || f.segments[..i].iter().any(|o| o.id == s.id) {
            return Err(Error::validation(at("segments"), format!("segment id `{}` reused", s.id)));
        }
    }

    let mut last_parent: isize = -1;
    for j in &f.joints {
        let jat = at(&format!("joints.{}", j.id));
        let [lo, hi] = j.limits;
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::validation(format!("{jat}.limits"), format!("need finite min < max, got [{lo}, {hi}]")));
        }
        let norm = Vector3::from(j.axis).norm();
        if !norm.is_finite() || (norm - 1.0).abs() > AXIS_NORM_TOL {
            return Err(Error::validation(format!("{jat}.axis"), format!("must be a unit vector (norm {norm})")));
        }
        let parent = if j.parent_segment == ROOT_SEGMENT {
            -1
        } else {
            match f.segment_index(&j.parent_segment) {
                Some(i) => i as isize,
                None => {
                    return Err(Error::validation(
                        format!("{jat}.parent_segment"),
                        format!("unknown segment `{}`", j.parent_segment),
                    ))
                }
            }
        };
        if parent < last_parent {
            return Err(Error::validation(format!("{jat}.parent_segment"), "joints must be ordered root to tip"));
        }
        if parent >= f.segments.len() as isize - 1 {
            return Err(Error::validation(
                format!("{jat}.parent_segment"),
                "a joint cannot sit at the fingertip (last segment)",
            ));
        }
        last_parent = parent;

        match j.kind {
            JointKind::Actuated => {
                if j.driver.is_some() || j.ratio.is_some() {
                    return Err(Error::validation(jat, "actuated joints take no driver or ratio"));
                }
            }
            JointKind::Coupled | JointKind::FixedRatio => {
                let Some(driver_id) = j.driver.as_deref() else {
                    return Err(Error::validation(format!("{jat}.driver"), "passive joint must name its driver"));
                };
                let Some(di) = f.joint_index(driver_id) else {
                    return Err(Error::validation(
                        format!("{jat}.driver"),
                        format!("driver `{driver_id}` is not a joint of this finger"),
                    ));
                };
                let driver = &f.joints[di];
                if driver.kind != JointKind::Actuated {
                    return Err(Error::validation(format!("{jat}.driver"), "driver must be an actuated joint"));
                }
                if di >= f.joint_index(&j.id).unwrap() {
                    return Err(Error::validation(
                        format!("{jat}.driver"),
                        "driver must be proximal to the driven joint",
                    ));
                }
                let (img_lo, img_hi) = if j.kind == JointKind::Coupled {
                    let Some(link) = f.coupling else {
                        return Err(Error::validation(at("coupling"), "coupled joint requires a coupling block"));
                    };
                    if j.ratio.is_some() {
                        return Err(Error::validation(format!("{jat}.ratio"), "coupled joints take no ratio"));
                    }
                    if !(driver.min() >= 0.0 && driver.max() < PI) {
                        return Err(Error::validation(
                            format!("fingers.{}.joints.{}.limits", f.name, driver.id),
                            "coupling driver limits must lie within [0, pi)",
                        ));
                    }
                    (link.flexion_coupling(driver.min())?, link.flexion_coupling(driver.max())?)
                } else {
                    let Some(r) = j.ratio.filter(|r| r.is_finite() && *r != 0.0) else {
                        return Err(Error::validation(
                            format!("{jat}.ratio"),
                            "fixed-ratio joint needs a finite nonzero ratio",
                        ));
                    };
                    let (a, b) = (r * driver.min(), r * driver.max());
                    (a.min(b), a.max(b))
                };
                if img_lo < lo - COUPLED_LIMIT_TOL || img_hi > hi + COUPLED_LIMIT_TOL {
                    return Err(Error::validation(
                        format!("{jat}.limits"),
                        format!("limits [{lo}, {hi}] do not contain the driven range [{img_lo}, {img_hi}]"),
                    ));
                }
            }
        }
    }

    let actuated = f.joints.iter().filter(|j| j.kind == JointKind::Actuated).count();
    let passive = f.joints.len() - actuated;
    let want = f.name.actuated_joints();
    if actuated != want || passive != 1 {
        return Err(Error::validation(
            at("joints"),
            format!("{} has {actuated} actuated and {passive} coupled joints, expected {want} and 1", f.name),
        ));
    }
    let coupled = f.joints.iter().any(|j| j.kind == JointKind::Coupled);
    if f.coupling.is_some() && !coupled {
        return Err(Error::validation(at("coupling"), "coupling block given but no joint is coupled"));
    }
    Ok(())
}
