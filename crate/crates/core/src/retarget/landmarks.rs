use std::io::BufRead;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::forward_kinematics;
use crate::model::{FingerName, HandModel, JointState, FULL_COUNT};

pub const LANDMARK_COUNT: usize = 21;
pub const WRIST: usize = 0;

/// Bones shorter than this (in landmark units, relative to the palm size)
/// are treated as degenerate.
const DEGENERATE_REL: f64 = 1e-9;

/// First landmark of each finger: CMC for the thumb, MCP for the others.
/// Each finger owns four consecutive landmarks ending at its tip.
pub fn finger_base(finger: FingerName) -> usize {
    1 + 4 * finger.index()
}

/// 21 hand landmarks at one instant: wrist, then per finger (thumb first)
/// four points from base to tip.
///
/// Serialized as `{"timestamp": t, "points": [x0, y0, z0, x1, ...]}` with 63
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFrame", into = "RawFrame")]
pub struct LandmarkFrame {
    pub timestamp: f64,
    pub points: [[f64; 3]; LANDMARK_COUNT],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    timestamp: f64,
    points: Vec<f64>,
}

impl TryFrom<RawFrame> for LandmarkFrame {
    type Error = Error;

    fn try_from(raw: RawFrame) -> Result<Self> {
        LandmarkFrame::from_flat(raw.timestamp, &raw.points)
    }
}

impl From<LandmarkFrame> for RawFrame {
    fn from(f: LandmarkFrame) -> Self {
        RawFrame { timestamp: f.timestamp, points: f.points.iter().flatten().copied().collect() }
    }
}

impl LandmarkFrame {
    pub fn new(timestamp: f64, points: [[f64; 3]; LANDMARK_COUNT]) -> Result<Self> {
        if !timestamp.is_finite() {
            return Err(Error::NonFinite("landmark timestamp"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("landmark points"));
        }
        Ok(Self { timestamp, points })
    }

    /// Builds a frame from 63 coordinates, point-major.
    pub fn from_flat(timestamp: f64, coords: &[f64]) -> Result<Self> {
        if coords.len() != 3 * LANDMARK_COUNT {
            return Err(Error::Mismatch {
                what: "landmark coordinates",
                expected: 3 * LANDMARK_COUNT,
                got: coords.len(),
            });
        }
        let points = std::array::from_fn(|i| [coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]]);
        Self::new(timestamp, points)
    }

    pub fn point(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.points[i])
    }

    /// The same frame with every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { timestamp: self.timestamp, points: self.points.map(|p| p.map(|v| v * s)) }
    }
}

/// Reads newline-delimited landmark records. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_landmark_stream<R: BufRead>(reader: R) -> Result<Vec<LandmarkFrame>> {
    let mut frames = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let frame: LandmarkFrame =
            serde_json::from_str(line).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        frames.push(frame);
    }
    Ok(frames)
}

/// Landmarks a hand tracker would report for the robot at `state`: the wrist
/// at the palm origin, each segment's proximal end, and the fingertip.
pub fn synthetic_landmarks(model: &HandModel, state: &JointState, timestamp: f64) -> LandmarkFrame {
    let frames = forward_kinematics(model, state);
    let mut points = [[0.0; 3]; LANDMARK_COUNT];
    for finger in FingerName::ALL {
        let f = frames.finger(finger);
        let base = finger_base(finger);
        for (s, seg) in f.segments.iter().take(3).enumerate() {
            points[base + s] = seg.translation.vector.into();
        }
        points[base + 3] = f.tip.coords.into();
    }
    LandmarkFrame { timestamp, points }
}

/// Human joint angles in the layout of the robot's full joint vector: thumb
/// (CMC flex, CMC abd, MCP abd, MCP flex, IP), then index, middle, ring and
/// little (MCP abd, MCP flex, PIP, DIP). Radians; `NaN` where the landmarks
/// are too degenerate to define the angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HumanAngles(pub [f64; FULL_COUNT]);

impl HumanAngles {
    pub fn values(&self) -> &[f64; FULL_COUNT] {
        &self.0
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

fn unit(v: Vector3<f64>, scale: f64) -> Option<Vector3<f64>> {
    let n = v.norm();
    (n > DEGENERATE_REL * scale && n.is_finite()).then(|| v / n)
}

fn angle_between(a: Option<Vector3<f64>>, b: Option<Vector3<f64>>) -> f64 {
    match (a, b) {
        // atan2 of |a×b| and a·b stays accurate near 0 and π.
        (Some(a), Some(b)) => a.cross(&b).norm().atan2(a.dot(&b)),
        _ => f64::NAN,
    }
}

/// `(flex, abd)` of a unit bone `b` expressed in a frame whose chain first
/// rotates about `±z` (abduction, sign `s`) and then about `y` (flexion).
fn swing(b: Vector3<f64>, s: f64) -> (f64, f64) {
    let flex = (-b.z).clamp(-1.0, 1.0).asin();
    let abd = s * b.y.atan2(b.x);
    (flex, abd)
}

/// Palm frame of the landmarks as columns `[x y z]`: x from the wrist toward
/// the index MCP, z dorsal (opposite the palm normal formed with the little
/// MCP), y completing a right-handed frame.
fn palm_frame(frame: &LandmarkFrame, scale: f64) -> Option<Matrix3<f64>> {
    let w = frame.point(WRIST);
    let x = unit(frame.point(finger_base(FingerName::Index)) - w, scale)?;
    let little = frame.point(finger_base(FingerName::Little)) - w;
    let z = -unit(x.cross(&little), scale)?;
    let y = z.cross(&x);
    Some(Matrix3::from_columns(&[x, y, z]))
}

/// Largest wrist-to-point distance, used to make degeneracy thresholds
/// independent of the landmark units.
fn frame_scale(frame: &LandmarkFrame) -> f64 {
    let w = frame.point(WRIST);
    (1..LANDMARK_COUNT).map(|i| (frame.point(i) - w).norm()).fold(0.0, f64::max)
}

/// Joint angles of the human hand in `frame`.
///
/// Each non-thumb finger is measured in a frame whose x axis is the wrist to
/// MCP direction projected onto the palm plane. The proximal bone gives MCP
/// flexion (elevation out of the palm plane, positive palmar) and abduction
/// (azimuth, positive away from the middle finger). PIP and DIP flexion are
/// the angles between consecutive bones.
///
/// The thumb is measured in the palm frame itself: the CMC to MCP bone gives
/// CMC flexion (rotation toward the ulnar side) and CMC abduction (palmar
/// elevation); the proximal phalanx, expressed in the metacarpal frame, gives
/// MCP abduction (palmar swing) and flexion (curl toward the ulnar side); IP
/// flexion is the angle between the last two bones. These follow the joint
/// axes of the shipped thumb.
pub fn landmarks_to_human_angles(frame: &LandmarkFrame) -> HumanAngles {
    let mut out = [f64::NAN; FULL_COUNT];
    let scale = frame_scale(frame);
    let Some(palm) = palm_frame(frame, scale) else {
        return HumanAngles(out);
    };
    let z = palm.column(2).into_owned();
    let local = |v: Vector3<f64>| palm.transpose() * v;
    let bone = |a: usize, b: usize| unit(frame.point(b) - frame.point(a), scale);

    let mut slot = 0;
    for finger in FingerName::ALL {
        let base = finger_base(finger);
        let b0 = bone(base, base + 1);
        let b1 = bone(base + 1, base + 2);
        let b2 = bone(base + 2, base + 3);

        if finger == FingerName::Thumb {
            if let Some(m) = b0 {
                let m_local = local(m);
                let (cmc_abd, neg_flex) = swing(m_local, 1.0);
                let cmc_flex = -neg_flex;
                out[slot] = cmc_flex;
                out[slot + 1] = cmc_abd;
                let meta = palm
                    * Rotation3::from_axis_angle(&Vector3::z_axis(), -cmc_flex).matrix()
                    * Rotation3::from_axis_angle(&Vector3::y_axis(), cmc_abd).matrix();
                if let Some(p) = b1 {
                    // Palmar swing about y, then ulnar curl about -z.
                    let l = meta.transpose() * p;
                    out[slot + 2] = (-l.z).atan2(l.x);
                    out[slot + 3] = (-l.y).clamp(-1.0, 1.0).asin();
                }
            }
            out[slot + 4] = angle_between(b1, b2);
            slot += 5;
            continue;
        }

        let sign = match finger {
            FingerName::Index | FingerName::Middle => 1.0,
            _ => -1.0,
        };
        let to_mcp = frame.point(base) - frame.point(WRIST);
        let root_x = unit(to_mcp - z * z.dot(&to_mcp), scale);
        if let (Some(rx), Some(b)) = (root_x, b0) {
            let ry = z.cross(&rx);
            let root = Matrix3::from_columns(&[rx, ry, z]);
            let (flex, abd) = swing(root.transpose() * b, sign);
            out[slot] = abd;
            out[slot + 1] = flex;
        }
        out[slot + 2] = angle_between(b0, b1);
        out[slot + 3] = angle_between(b1, b2);
        slot += 4;
    }
    HumanAngles(out)
}
