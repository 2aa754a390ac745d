//! Devices the control loop commands: a simulated loopback and a raw serial
//! port (or any writable path).

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use handtwin_core::model::{HandModel, ACTUATED_COUNT};

use crate::error::{ControlError, Result};
use crate::protocol::{encode_frame, FrameDecoder, Packet};

pub type Actuated = [f64; ACTUATED_COUNT];

pub trait Device: Send {
    /// Sends one encoded frame.
    fn send(&mut self, model: &HandModel, frame: &[u8]) -> Result<()>;

    /// Advances the device by `dt` seconds.
    fn advance(&mut self, dt: f64);

    /// Joint angles the device reports, if it reports any.
    fn measured(&self) -> Option<Actuated>;
}

/// Simulated hand: decodes the frames it receives and reports them back one
/// period later, optionally through a per-joint first-order lag.
#[derive(Debug, Clone)]
pub struct LoopbackDevice {
    decoder: FrameDecoder,
    pending: Option<Actuated>,
    commanded: Option<Actuated>,
    measured: Option<Actuated>,
    /// Lag time constant per channel (s); 0 follows the command exactly.
    lag: [f64; ACTUATED_COUNT],
}

impl LoopbackDevice {
    pub fn new() -> Self {
        Self::with_lag([0.0; ACTUATED_COUNT])
    }

    pub fn with_lag(lag: [f64; ACTUATED_COUNT]) -> Self {
        Self { decoder: FrameDecoder::new(), pending: None, commanded: None, measured: None, lag }
    }

    pub fn decoder_stats(&self) -> crate::protocol::DecoderStats {
        self.decoder.stats()
    }
}

impl Default for LoopbackDevice {
    fn default() -> Self {
        Self::new()
    }
}

impl Device for LoopbackDevice {
    fn send(&mut self, model: &HandModel, frame: &[u8]) -> Result<()> {
        for p in self.decoder.push(model, frame) {
            if let Packet::Joint { actuated, .. } = p {
                self.pending = Some(actuated);
            }
        }
        Ok(())
    }

    fn advance(&mut self, dt: f64) {
        if let Some(cmd) = self.commanded {
            let prev = self.measured.unwrap_or(cmd);
            self.measured = Some(std::array::from_fn(|c| {
                let tau = self.lag[c];
                if tau <= 0.0 {
                    cmd[c]
                } else {
                    prev[c] + (cmd[c] - prev[c]) * (1.0 - (-dt / tau).exp())
                }
            }));
        }
        if let Some(p) = self.pending.take() {
            self.commanded = Some(p);
        }
    }

    fn measured(&self) -> Option<Actuated> {
        self.measured
    }
}

/// Writes frames to a serial device node or file. Reports nothing back.
#[derive(Debug)]
pub struct SerialDevice {
    file: File,
}

impl SerialDevice {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let file = OpenOptions::new().write(true).create(true).truncate(false).open(path.as_ref())?;
        Ok(Self { file })
    }
}

impl Device for SerialDevice {
    fn send(&mut self, _model: &HandModel, frame: &[u8]) -> Result<()> {
        self.file.write_all(frame).map_err(ControlError::from)
    }

    fn advance(&mut self, _dt: f64) {}

    fn measured(&self) -> Option<Actuated> {
        None
    }
}

/// Encodes `q` and sends it to `device`.
pub fn send_command(device: &mut dyn Device, model: &HandModel, q: &Actuated) -> Result<()> {
    device.send(model, &encode_frame(model, q))
}
