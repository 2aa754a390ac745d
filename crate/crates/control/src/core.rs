//! Single-threaded reference of the service: the controller, the device and
//! the message handling, driven one step at a time.

use handtwin_core::evaluation::GraspLibrary;
use handtwin_core::kinematics::forward_kinematics;
use handtwin_core::model::{resolve_full_state, HandModel};
use handtwin_core::retarget::{LandmarkFrame, RetargetConfig};

use crate::controller::{ControlConfig, Controller, ModeName};
use crate::device::{send_command, Device};
use crate::error::{ControlError, Result};
use crate::messages::{Inbound, StateMessage, SCHEMA_VERSION};

pub struct ControlCore {
    model: HandModel,
    library: GraspLibrary,
    controller: Controller,
    device: Box<dyn Device>,
}

impl ControlCore {
    /// Starts at the model's zero pose in joint-level mode.
    pub fn new(
        model: HandModel,
        library: GraspLibrary,
        cfg: ControlConfig,
        retarget: RetargetConfig,
        device: Box<dyn Device>,
    ) -> Result<Self> {
        let controller = Controller::new(&model, cfg, retarget, model.zero_pose())?;
        Ok(Self { model, library, controller, device })
    }

    pub fn model(&self) -> &HandModel {
        &self.model
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn handle(&mut self, msg: Inbound) -> Result<()> {
        let model = &self.model;
        match msg {
            Inbound::SetJoint { channel, rad } => self.controller.set_joint(channel, rad),
            Inbound::Grasp { id, duration } => {
                let pose = self.grasp(id)?;
                self.controller.start_trajectory(model, &pose, duration)
            }
            Inbound::SetMode { mode, params } => match mode {
                ModeName::JointLevel => self.controller.set_joint_level(params.target.as_deref()),
                ModeName::Shadow => self.controller.set_shadow(model),
                ModeName::TaskBased => {
                    let duration =
                        params.duration.ok_or_else(|| ControlError::Command("task_based needs `duration`".into()))?;
                    let end = match (params.target, params.grasp) {
                        (Some(t), None) => t,
                        (None, Some(id)) => self.grasp(id)?.to_vec(),
                        _ => {
                            return Err(ControlError::Command(
                                "task_based needs exactly one of `target` and `grasp`".into(),
                            ))
                        }
                    };
                    self.controller.start_trajectory(model, &end, duration)
                }
            },
            Inbound::Landmarks { timestamp, points } => {
                let frame = LandmarkFrame::from_flat(timestamp, &points)?;
                self.controller.push_landmarks(model, &frame);
                Ok(())
            }
        }
    }

    fn grasp(&self, id: u32) -> Result<[f64; 16]> {
        self.library.pose(id).map(|p| p.actuated).ok_or_else(|| ControlError::Command(format!("no grasp with id {id}")))
    }

    /// One control period: compute the output, send it, advance the device.
    pub fn step(&mut self) -> Result<StateMessage> {
        let out = self.controller.step(&self.model);
        send_command(self.device.as_mut(), &self.model, &out)?;
        self.device.advance(self.controller.config().period);
        Ok(self.snapshot())
    }

    pub fn snapshot(&self) -> StateMessage {
        let commanded = *self.controller.output();
        let measured = self.device.measured().unwrap_or(commanded);
        let state = resolve_full_state(&self.model, &measured).expect("device reports finite angles");
        let frames = forward_kinematics(&self.model, &state);
        let skeleton = frames
            .fingers
            .iter()
            .map(|f| {
                let mut pts: Vec<[f64; 3]> = vec![f.root.translation.vector.into()];
                pts.extend(f.segments.iter().map(|s| -> [f64; 3] { s.translation.vector.into() }));
                pts.push(f.tip.coords.into());
                pts
            })
            .collect();
        StateMessage {
            schema_version: SCHEMA_VERSION,
            tick: self.controller.steps(),
            time: self.controller.clock(),
            mode: self.controller.mode().name(),
            actuated: state.actuated().to_vec(),
            commanded: commanded.to_vec(),
            full: state.full().to_vec(),
            tips: frames.tips().tips.to_vec(),
            skeleton,
            limits_hit: self.controller.limits_hit().to_vec(),
            progress: self.controller.progress(),
        }
    }
}
