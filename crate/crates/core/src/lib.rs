//! Software twin of a 16-DoF tendon-driven anthropomorphic hand.
//!
//! - [`model`]: hand description, validation and joint-state resolution
//! - [`linkage`]: anti-parallelogram coupling, its geometric oracle and
//!   least-squares synthesis
//! - [`kinematics`]: forward kinematics, Jacobians, damped least-squares IK
//!   and the static fingertip force bound
//! - [`evaluation`]: grasp-library validation and the Kapandji opposition test
//! - [`retarget`]: landmark-driven motion shadowing
//!
//! Batch workloads take an [`Execution`]; with the `parallel` feature they run
//! on rayon, otherwise sequentially.

pub mod error;
pub mod evaluation;
pub mod exec;
pub mod kinematics;
pub mod linkage;
pub mod model;
pub mod optimize;
pub mod retarget;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{load_hand_model, resolve_full_state, FingerName, HandModel, JointState};
