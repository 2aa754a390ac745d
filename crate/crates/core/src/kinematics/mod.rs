//! Forward kinematics over the coupled 21-joint hand, fingertip Jacobians
//! with the passive joints folded in, damped least-squares IK, and the static
//! fingertip force bound.

mod chain;
mod force;
mod ik;

use nalgebra::{IsometryMatrix3, Matrix3, Point3, Rotation3};
use serde::Serialize;

pub use chain::{
    finger_forward, fingertip_jacobian, forward_kinematics, ChainJoint, FingerFrames, HandFrames, SerialChain,
};
pub use force::{force_limit, max_fingertip_force, ForceLimit, NULL_DIRECTION_EPS};
pub use ik::{inverse_kinematics, solve_ik_batch, IkJob, IkOptions, IkSolution};

/// Rigid transform with an explicit rotation matrix.
pub type RigidTransform = IsometryMatrix3<f64>;

/// Largest deviation of `R` from a proper rotation: max over the entries of
/// `RᵀR - I` and `|det R - 1|`.
pub fn orthonormality_error(r: &Rotation3<f64>) -> f64 {
    let m = r.matrix();
    let gram = m.transpose() * m - Matrix3::identity();
    gram.amax().max((m.determinant() - 1.0).abs())
}

/// Fingertip positions in the palm frame, thumb first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FingertipSet {
    pub tips: [[f64; 3]; 5],
}

impl FingertipSet {
    pub fn tip(&self, finger: crate::model::FingerName) -> Point3<f64> {
        Point3::from(self.tips[finger.index()])
    }
}
