use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ACTUATED_COUNT;

pub type Actuated = [f64; ACTUATED_COUNT];

/// Causal EMA followed by a per-joint velocity clamp.
#[derive(Debug, Clone)]
pub struct StreamSmoother {
    alpha: f64,
    max_velocity: f64,
    state: Option<SmootherState>,
    dropped: usize,
}

#[derive(Debug, Clone, Copy)]
struct SmootherState {
    time: f64,
    ema: Actuated,
    output: Actuated,
}

impl StreamSmoother {
    pub fn new(alpha: f64, max_velocity: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::validation("alpha", "must lie in (0, 1]"));
        }
        if !(max_velocity > 0.0) {
            return Err(Error::validation("max_velocity", "must be positive"));
        }
        Ok(Self { alpha, max_velocity, state: None, dropped: 0 })
    }

    /// Frames rejected for a non-increasing or non-finite timestamp.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn last_output(&self) -> Option<&Actuated> {
        self.state.as_ref().map(|s| &s.output)
    }

    /// Filters one sample; `None` if the sample was dropped.
    pub fn push(&mut self, time: f64, q: &Actuated) -> Option<Actuated> {
        if !time.is_finite() || q.iter().any(|v| !v.is_finite()) {
            self.dropped += 1;
            return None;
        }
        let Some(prev) = self.state else {
            self.state = Some(SmootherState { time, ema: *q, output: *q });
            return Some(*q);
        };
        if time <= prev.time {
            self.dropped += 1;
            return None;
        }
        let max_step = self.max_velocity * (time - prev.time);
        let mut ema = prev.ema;
        let mut output = prev.output;
        for c in 0..ACTUATED_COUNT {
            ema[c] = self.alpha * q[c] + (1.0 - self.alpha) * ema[c];
            output[c] += (ema[c] - output[c]).clamp(-max_step, max_step);
        }
        self.state = Some(SmootherState { time, ema, output });
        Some(output)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothedStream {
    pub frames: Vec<(f64, Actuated)>,
    pub dropped: usize,
}

/// Runs a whole recorded stream through a fresh [`StreamSmoother`].
pub fn smooth_stream(stream: &[(f64, Actuated)], alpha: f64, max_velocity: f64) -> Result<SmoothedStream> {
    let mut s = StreamSmoother::new(alpha, max_velocity)?;
    let frames = stream.iter().filter_map(|(t, q)| s.push(*t, q).map(|out| (*t, out))).collect();
    Ok(SmoothedStream { frames, dropped: s.dropped() })
}
