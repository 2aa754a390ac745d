//! Mode state machine and the rate-limited control step.

use handtwin_core::model::{resolve_full_state, HandModel, ACTUATED_COUNT};
use handtwin_core::retarget::{LandmarkFrame, RetargetConfig, Retargeter};
use serde::{Deserialize, Serialize};

use crate::device::Actuated;
use crate::error::{ControlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    /// Control period (s).
    pub period: f64,
    /// Per-joint velocity limit applied in every mode (rad/s).
    pub max_velocity: f64,
    /// State broadcast rate (Hz).
    pub broadcast_hz: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self { period: 0.02, max_velocity: 8.0, broadcast_hz: 30.0 }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("period", self.period), ("max_velocity", self.max_velocity), ("broadcast_hz", self.broadcast_hz)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::Command(format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// Largest change of any joint in one step (rad).
    pub fn max_step(&self) -> f64 {
        self.max_velocity * self.period
    }
}

/// `3u² − 2u³` on `u` clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: Actuated,
    pub end: Actuated,
    /// Seconds.
    pub duration: f64,
    /// Controller clock at which the trajectory began (s).
    pub start_time: f64,
}

impl Trajectory {
    pub fn new(model: &HandModel, start: Actuated, end: Actuated, duration: f64, start_time: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(ControlError::Command("duration must be positive".into()));
        }
        model.validate_actuated(&start)?;
        model.validate_actuated(&end)?;
        Ok(Self { start, end, duration, start_time })
    }

    pub fn progress(&self, clock: f64) -> f64 {
        smoothstep((clock - self.start_time) / self.duration)
    }

    pub fn at(&self, clock: f64) -> Actuated {
        let s = self.progress(clock);
        // This form is exact at both endpoints.
        std::array::from_fn(|c| (1.0 - s) * self.start[c] + s * self.end[c])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ControlMode {
    JointLevel {
        target: Actuated,
    },
    TaskBased {
        trajectory: Trajectory,
    },
    /// `latest` is the newest retarget output, `None` before the first frame.
    Shadow {
        latest: Option<Actuated>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    JointLevel,
    TaskBased,
    Shadow,
}

impl ControlMode {
    pub fn name(&self) -> ModeName {
        match self {
            ControlMode::JointLevel { .. } => ModeName::JointLevel,
            ControlMode::TaskBased { .. } => ModeName::TaskBased,
            ControlMode::Shadow { .. } => ModeName::Shadow,
        }
    }
}

/// Raw target of `mode` at `clock`, before rate limiting. Shadow mode holds
/// `current` until a frame has arrived.
pub fn step_control_loop(mode: &ControlMode, clock: f64, current: &Actuated) -> Actuated {
    match mode {
        ControlMode::JointLevel { target } => *target,
        ControlMode::TaskBased { trajectory } => trajectory.at(clock),
        ControlMode::Shadow { latest } => latest.unwrap_or(*current),
    }
}

/// Moves `current` toward `target` by at most `max_step` per joint.
pub fn rate_limit(current: &Actuated, target: &Actuated, max_step: f64) -> Actuated {
    std::array::from_fn(|c| current[c] + (target[c] - current[c]).clamp(-max_step, max_step))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ControlDiagnostics {
    /// Shadow-mode steps without a fresh landmark frame.
    pub starved_steps: u64,
    /// Landmark frames dropped as stale.
    pub dropped_frames: usize,
}

/// Deterministic controller: owns the mode, the clock and the last output.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControlConfig,
    mode: ControlMode,
    output: Actuated,
    clock: f64,
    steps: u64,
    retarget_cfg: RetargetConfig,
    retargeter: Retargeter,
    fresh_frame: bool,
    limits_hit: [bool; ACTUATED_COUNT],
    diag: ControlDiagnostics,
}

impl Controller {
    /// Starts in joint-level mode holding `initial` (clamped into the limits).
    pub fn new(model: &HandModel, cfg: ControlConfig, retarget: RetargetConfig, initial: Actuated) -> Result<Self> {
        cfg.validate()?;
        let (output, _) = model.clamp_actuated(&initial);
        let retargeter = Retargeter::new(model, retarget.clone(), output)?;
        Ok(Self {
            cfg,
            mode: ControlMode::JointLevel { target: output },
            output,
            clock: 0.0,
            steps: 0,
            retarget_cfg: retarget,
            retargeter,
            fresh_frame: false,
            limits_hit: [false; ACTUATED_COUNT],
            diag: ControlDiagnostics::default(),
        })
    }

    pub fn config(&self) -> &ControlConfig {
        &self.cfg
    }

    pub fn mode(&self) -> &ControlMode {
        &self.mode
    }

    pub fn output(&self) -> &Actuated {
        &self.output
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Channels whose last raw target lay outside the joint limits.
    pub fn limits_hit(&self) -> &[bool; ACTUATED_COUNT] {
        &self.limits_hit
    }

    pub fn diagnostics(&self) -> ControlDiagnostics {
        ControlDiagnostics { dropped_frames: self.retargeter.dropped(), ..self.diag }
    }

    /// Progress of the running trajectory in `[0, 1]`.
    pub fn progress(&self) -> Option<f64> {
        match &self.mode {
            ControlMode::TaskBased { trajectory } => Some(trajectory.progress(self.clock)),
            _ => None,
        }
    }

    /// Joint-level mode holding `target`, or the current pose when `None`.
    /// Out-of-limit values are clamped at every step and flagged.
    pub fn set_joint_level(&mut self, target: Option<&[f64]>) -> Result<()> {
        let target = match target {
            Some(t) => actuated_from(t)?,
            None => self.output,
        };
        self.mode = ControlMode::JointLevel { target };
        Ok(())
    }

    /// Changes one channel of the joint-level target, entering joint-level
    /// mode from the current pose if needed.
    pub fn set_joint(&mut self, channel: usize, rad: f64) -> Result<()> {
        if channel >= ACTUATED_COUNT {
            return Err(ControlError::Command(format!("channel {channel} out of range 0..{ACTUATED_COUNT}")));
        }
        if !rad.is_finite() {
            return Err(ControlError::Command("angle must be finite".into()));
        }
        let mut target = match &self.mode {
            ControlMode::JointLevel { target } => *target,
            _ => self.output,
        };
        target[channel] = rad;
        self.mode = ControlMode::JointLevel { target };
        Ok(())
    }

    /// Smoothstep trajectory from the current pose to `end`.
    pub fn start_trajectory(&mut self, model: &HandModel, end: &[f64], duration: f64) -> Result<()> {
        let end = *resolve_full_state(model, end)?.actuated();
        let trajectory = Trajectory::new(model, self.output, end, duration, self.clock)?;
        self.mode = ControlMode::TaskBased { trajectory };
        Ok(())
    }

    /// Shadow mode with a fresh filter seeded at the current pose.
    pub fn set_shadow(&mut self, model: &HandModel) -> Result<()> {
        self.retargeter = Retargeter::new(model, self.retarget_cfg.clone(), self.output)?;
        self.fresh_frame = false;
        self.mode = ControlMode::Shadow { latest: None };
        Ok(())
    }

    /// Feeds a landmark frame; only Shadow mode consumes it.
    pub fn push_landmarks(&mut self, model: &HandModel, frame: &LandmarkFrame) {
        if let ControlMode::Shadow { latest } = &mut self.mode {
            if let Some(q) = self.retargeter.push(model, frame) {
                *latest = Some(q);
                self.fresh_frame = true;
            }
        }
    }

    /// Advances the clock by one period and returns the new output.
    pub fn step(&mut self, model: &HandModel) -> Actuated {
        self.clock = (self.steps + 1) as f64 * self.cfg.period;
        self.steps += 1;
        if matches!(self.mode, ControlMode::Shadow { .. }) {
            if !self.fresh_frame {
                self.diag.starved_steps += 1;
            }
            self.fresh_frame = false;
        }
        let raw = step_control_loop(&self.mode, self.clock, &self.output);
        let (target, hit) = model.clamp_actuated(&raw);
        self.limits_hit = hit;
        self.output = rate_limit(&self.output, &target, self.cfg.max_step());
        self.output
    }
}

fn actuated_from(values: &[f64]) -> Result<Actuated> {
    let q: Actuated = values
        .try_into()
        .map_err(|_| ControlError::Command(format!("expected {ACTUATED_COUNT} angles, got {}", values.len())))?;
    if q.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::Command("angles must be finite".into()));
    }
    Ok(q)
}
