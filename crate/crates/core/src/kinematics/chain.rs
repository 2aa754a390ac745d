use nalgebra::{Matrix3xX, Point3, Rotation3, Translation3, Unit, Vector3};

use super::{FingertipSet, RigidTransform};
use crate::error::{Error, Result};
use crate::linkage::coupling_slope;
use crate::model::{FingerModel, FingerName, HandModel, JointDrive, JointState, FULL_COUNT, ROOT_SEGMENT};

/// A revolute joint reached from the previous joint frame by `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainJoint {
    pub offset: Vector3<f64>,
    pub axis: Unit<Vector3<f64>>,
}

/// Open chain of revolute joints ending in a tip point.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialChain {
    pub base: RigidTransform,
    pub joints: Vec<ChainJoint>,
    pub tip_offset: Vector3<f64>,
}

impl SerialChain {
    /// Chain of a finger: segments lie along the local x axis.
    pub fn from_finger(finger: &FingerModel) -> Self {
        let parent_of = |seg: &str| {
            if seg == ROOT_SEGMENT {
                -1
            } else {
                finger.segment_index(seg).expect("validated model") as isize
            }
        };
        let span = |from: isize, to: isize| -> f64 {
            // Lengths of segments (from, to].
            ((from + 1)..=to).map(|s| finger.segments[s as usize].length).sum()
        };
        let mut prev = -1;
        let mut joints = Vec::with_capacity(finger.joints.len());
        for j in &finger.joints {
            let p = parent_of(&j.parent_segment);
            joints.push(ChainJoint { offset: Vector3::x() * span(prev, p), axis: j.axis_unit() });
            prev = p;
        }
        Self {
            base: finger.root.isometry(),
            joints,
            tip_offset: Vector3::x() * span(prev, finger.segments.len() as isize - 1),
        }
    }

    /// World frame of every joint after its own rotation.
    pub fn joint_frames(&self, q: &[f64]) -> Vec<RigidTransform> {
        debug_assert_eq!(q.len(), self.joints.len());
        let mut frame = self.base;
        self.joints
            .iter()
            .zip(q)
            .map(|(j, &angle)| {
                frame *= RigidTransform::from_parts(
                    Translation3::from(j.offset),
                    Rotation3::from_axis_angle(&j.axis, angle),
                );
                frame
            })
            .collect()
    }

    pub fn tip_from_frames(&self, frames: &[RigidTransform]) -> Point3<f64> {
        let last = frames.last().unwrap_or(&self.base);
        last * Point3::from(self.tip_offset)
    }

    pub fn tip(&self, q: &[f64]) -> Point3<f64> {
        self.tip_from_frames(&self.joint_frames(q))
    }

    /// `d tip / d q_j = axis_j × (tip - p_j)`, one column per joint.
    pub fn geometric_jacobian(&self, q: &[f64]) -> Matrix3xX<f64> {
        let frames = self.joint_frames(q);
        geometric_columns(self, &frames)
    }
}

fn geometric_columns(chain: &SerialChain, frames: &[RigidTransform]) -> Matrix3xX<f64> {
    let tip = chain.tip_from_frames(frames);
    let mut jac = Matrix3xX::zeros(frames.len());
    for (c, (frame, joint)) in frames.iter().zip(&chain.joints).enumerate() {
        // Rotation about the joint axis leaves the axis fixed, so the
        // post-rotation frame gives the same world axis.
        let axis = frame.rotation * joint.axis.into_inner();
        let lever = tip - Point3::from(frame.translation.vector);
        jac.set_column(c, &axis.cross(&lever));
    }
    jac
}

/// Frames of one finger evaluated at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerFrames {
    pub finger: FingerName,
    pub root: RigidTransform,
    /// Joint frames after rotation, root to tip.
    pub joints: Vec<RigidTransform>,
    /// Frame at the proximal end of each segment, x along the segment.
    pub segments: Vec<RigidTransform>,
    pub tip: Point3<f64>,
}

impl FingerFrames {
    /// Frame of the named segment; `"root"` is the finger root frame.
    pub fn segment_frame(&self, model: &HandModel, segment: &str) -> Option<&RigidTransform> {
        if segment == ROOT_SEGMENT {
            return Some(&self.root);
        }
        model.finger(self.finger).segment_index(segment).map(|i| &self.segments[i])
    }

    pub fn joint_position(&self, joint: usize) -> Point3<f64> {
        Point3::from(self.joints[joint].translation.vector)
    }
}

/// Frames of all five fingers.
#[derive(Debug, Clone, PartialEq)]
pub struct HandFrames {
    pub fingers: Vec<FingerFrames>,
}

impl HandFrames {
    pub fn finger(&self, finger: FingerName) -> &FingerFrames {
        &self.fingers[finger.index()]
    }

    pub fn tips(&self) -> FingertipSet {
        FingertipSet { tips: std::array::from_fn(|i| self.fingers[i].tip.coords.into()) }
    }
}

/// Joint angles of one finger, root to tip, taken from a full state vector.
pub(crate) fn finger_angles(model: &HandModel, finger: FingerName, full: &[f64]) -> Vec<f64> {
    model.finger_drives(finger).iter().map(|&(_, i)| full[i]).collect()
}

/// Forward kinematics of one finger from a 21-entry full state.
pub fn finger_forward(model: &HandModel, finger: FingerName, full: &[f64]) -> Result<FingerFrames> {
    if full.len() != FULL_COUNT {
        return Err(Error::Mismatch { what: "full joint vector", expected: FULL_COUNT, got: full.len() });
    }
    Ok(finger_frames(model, finger, &finger_angles(model, finger, full)))
}

pub(crate) fn finger_frames(model: &HandModel, finger: FingerName, q: &[f64]) -> FingerFrames {
    let spec = model.finger(finger);
    let chain = SerialChain::from_finger(spec);
    let joints = chain.joint_frames(q);
    let tip = chain.tip_from_frames(&joints);

    let parents: Vec<isize> = spec
        .joints
        .iter()
        .map(|j| {
            if j.parent_segment == ROOT_SEGMENT {
                -1
            } else {
                spec.segment_index(&j.parent_segment).unwrap() as isize
            }
        })
        .collect();
    let segments = (0..spec.segments.len())
        .map(|s| {
            // Last joint proximal to segment s, then straight along x.
            let last = parents.iter().rposition(|&p| p < s as isize);
            let (frame, from) = match last {
                Some(j) => (joints[j], parents[j] + 1),
                None => (chain.base, 0),
            };
            let run: f64 = (from..s as isize).map(|i| spec.segments[i as usize].length).sum();
            frame * RigidTransform::translation(run, 0.0, 0.0)
        })
        .collect();

    FingerFrames { finger, root: chain.base, joints, segments, tip }
}

/// Frames of every finger and the fingertip set.
pub fn forward_kinematics(model: &HandModel, state: &JointState) -> HandFrames {
    HandFrames {
        fingers: FingerName::ALL
            .iter()
            .map(|&f| finger_frames(model, f, &finger_angles(model, f, state.full())))
            .collect(),
    }
}

/// `d tip / d (actuated joints of finger)` in m/rad, columns in the finger's
/// root-to-tip actuated order. Passive joints contribute through the chain
/// rule: their geometric column scaled by `d q_passive / d q_driver`.
pub fn fingertip_jacobian(model: &HandModel, state: &JointState, finger: FingerName) -> Matrix3xX<f64> {
    jacobian_at(model, finger, state.full())
}

pub(crate) fn jacobian_at(model: &HandModel, finger: FingerName, full: &[f64]) -> Matrix3xX<f64> {
    let drives = model.finger_drives(finger);
    let q = finger_angles(model, finger, full);
    let chain = SerialChain::from_finger(model.finger(finger));
    let frames = chain.joint_frames(&q);
    let geo = geometric_columns(&chain, &frames);

    // Column of each actuated joint within the output.
    let mut out_col = vec![usize::MAX; drives.len()];
    let mut n = 0;
    for (j, (d, _)) in drives.iter().enumerate() {
        if matches!(d, JointDrive::Actuated { .. }) {
            out_col[j] = n;
            n += 1;
        }
    }
    let mut jac = Matrix3xX::zeros(n);
    for (j, (d, _)) in drives.iter().enumerate() {
        let (col, scale) = match *d {
            JointDrive::Actuated { .. } => (out_col[j], 1.0),
            JointDrive::Coupled { driver, linkage } => (out_col[driver], coupling_slope(linkage.k(), q[driver])),
            JointDrive::FixedRatio { driver, ratio } => (out_col[driver], ratio),
        };
        let mut target = jac.column_mut(col);
        target += geo.column(j) * scale;
    }
    jac
}
