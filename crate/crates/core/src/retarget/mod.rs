//! Motion shadowing: human hand landmarks to robot joint targets.
//!
//! The pipeline is [`landmarks_to_human_angles`], then [`human_to_robot`]
//! (affine calibration, coupling-aware PIP choice, clamping), then the
//! [`StreamSmoother`]. [`Retargeter`] chains the three for a live stream.

mod landmarks;
mod mapping;
mod smoothing;

pub use landmarks::{
    finger_base, landmarks_to_human_angles, read_landmark_stream, synthetic_landmarks, HumanAngles, LandmarkFrame,
    LANDMARK_COUNT, WRIST,
};
pub use mapping::{human_to_robot, human_to_robot_with_fallback, AffineMap, RetargetConfig};
pub use smoothing::{smooth_stream, Actuated, SmoothedStream, StreamSmoother};

use crate::error::Result;
use crate::model::HandModel;

/// Stateful landmark-to-target pipeline for one stream.
#[derive(Debug, Clone)]
pub struct Retargeter {
    cfg: RetargetConfig,
    smoother: StreamSmoother,
    hold: Actuated,
}

impl Retargeter {
    /// `initial` is used for joints whose landmarks are degenerate before any
    /// good frame has arrived.
    pub fn new(model: &HandModel, cfg: RetargetConfig, initial: Actuated) -> Result<Self> {
        cfg.validate(Some(model))?;
        let smoother = StreamSmoother::new(cfg.alpha, cfg.max_velocity)?;
        let (hold, _) = model.clamp_actuated(&initial);
        Ok(Self { cfg, smoother, hold })
    }

    pub fn config(&self) -> &RetargetConfig {
        &self.cfg
    }

    pub fn dropped(&self) -> usize {
        self.smoother.dropped()
    }

    pub fn last_output(&self) -> Option<&Actuated> {
        self.smoother.last_output()
    }

    /// Processes one frame; `None` if it was dropped as stale.
    pub fn push(&mut self, model: &HandModel, frame: &LandmarkFrame) -> Option<Actuated> {
        let human = landmarks_to_human_angles(frame);
        let fallback = *self.smoother.last_output().unwrap_or(&self.hold);
        let target = human_to_robot_with_fallback(model, &human, &self.cfg, &fallback);
        self.smoother.push(frame.timestamp, &target)
    }
}
