//! Serial command frames.
//!
//! ```text
//! offset  size  field
//! 0       2     header 0xAA 0x55
//! 2       1     type (0x01 joint command, 0x02 status request)
//! 3       32    16 x u16 little-endian ticks (joint command only)
//! 35      2     CRC-16/CCITT-FALSE over type and payload, little-endian
//! ```
//!
//! A tick `t` in `0..=4095` maps affinely onto the joint's `[min, max]`.
//! Channel order follows the model's wire map.

use crc::{Crc, CRC_16_IBM_3740};
use handtwin_core::model::{HandModel, ACTUATED_COUNT};

use crate::error::{ControlError, Result};

pub const HEADER: [u8; 2] = [0xAA, 0x55];
pub const TYPE_JOINT: u8 = 0x01;
pub const TYPE_STATUS: u8 = 0x02;
pub const JOINT_FRAME_LEN: usize = 37;
pub const STATUS_FRAME_LEN: usize = 5;
pub const TICK_MAX: u16 = 4095;

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
const CCITT_FALSE: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub fn crc16(bytes: &[u8]) -> u16 {
    CCITT_FALSE.checksum(bytes)
}

/// Smallest angle step the protocol can express on `channel` (rad).
pub fn tick_quantum(model: &HandModel, channel: usize) -> f64 {
    let [lo, hi] = model.channel_joint(channel).limits;
    (hi - lo) / f64::from(TICK_MAX)
}

pub fn angle_to_tick(model: &HandModel, channel: usize, angle: f64) -> u16 {
    let [lo, hi] = model.channel_joint(channel).limits;
    if angle.is_nan() {
        return 0;
    }
    let u = ((angle - lo) / (hi - lo)).clamp(0.0, 1.0);
    (u * f64::from(TICK_MAX)).round() as u16
}

pub fn tick_to_angle(model: &HandModel, channel: usize, tick: u16) -> f64 {
    let [lo, hi] = model.channel_joint(channel).limits;
    let t = tick.min(TICK_MAX);
    if t == TICK_MAX {
        return hi;
    }
    lo + (hi - lo) * f64::from(t) / f64::from(TICK_MAX)
}

/// Joint command frame for `actuated`, clamped into the joint limits.
pub fn encode_frame(model: &HandModel, actuated: &[f64; ACTUATED_COUNT]) -> [u8; JOINT_FRAME_LEN] {
    let mut out = [0u8; JOINT_FRAME_LEN];
    out[..2].copy_from_slice(&HEADER);
    out[2] = TYPE_JOINT;
    for (c, &q) in actuated.iter().enumerate() {
        let t = angle_to_tick(model, c, q);
        out[3 + 2 * c..5 + 2 * c].copy_from_slice(&t.to_le_bytes());
    }
    let crc = crc16(&out[2..35]);
    out[35..].copy_from_slice(&crc.to_le_bytes());
    out
}

pub fn encode_status_request() -> [u8; STATUS_FRAME_LEN] {
    let crc = crc16(&[TYPE_STATUS]).to_le_bytes();
    [HEADER[0], HEADER[1], TYPE_STATUS, crc[0], crc[1]]
}

/// A frame recovered from the byte stream.
#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Joint { ticks: [u16; ACTUATED_COUNT], actuated: [f64; ACTUATED_COUNT] },
    StatusRequest,
}

/// Decodes exactly one frame.
pub fn decode_frame(model: &HandModel, bytes: &[u8]) -> Result<Packet> {
    if bytes.len() < 3 || bytes[..2] != HEADER {
        return Err(ControlError::Frame("missing header".into()));
    }
    let len = match bytes[2] {
        TYPE_JOINT => JOINT_FRAME_LEN,
        TYPE_STATUS => STATUS_FRAME_LEN,
        t => return Err(ControlError::Frame(format!("unknown frame type 0x{t:02X}"))),
    };
    if bytes.len() != len {
        return Err(ControlError::Frame(format!("expected {len} bytes, got {}", bytes.len())));
    }
    let stored = u16::from_le_bytes([bytes[len - 2], bytes[len - 1]]);
    let computed = crc16(&bytes[2..len - 2]);
    if stored != computed {
        return Err(ControlError::Frame(format!("CRC mismatch: stored 0x{stored:04X}, computed 0x{computed:04X}")));
    }
    if bytes[2] == TYPE_STATUS {
        return Ok(Packet::StatusRequest);
    }
    let ticks: [u16; ACTUATED_COUNT] =
        std::array::from_fn(|c| u16::from_le_bytes([bytes[3 + 2 * c], bytes[4 + 2 * c]]));
    if let Some(c) = ticks.iter().position(|&t| t > TICK_MAX) {
        return Err(ControlError::Frame(format!("tick {} on channel {c} out of range", ticks[c])));
    }
    let actuated = std::array::from_fn(|c| tick_to_angle(model, c, ticks[c]));
    Ok(Packet::Joint { ticks, actuated })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub frames: usize,
    /// Frames dropped for a bad CRC or out-of-range tick.
    pub crc_errors: usize,
    /// Runs of bytes skipped while hunting for a header.
    pub resyncs: usize,
    pub skipped_bytes: usize,
}

/// Incremental decoder over an arbitrary byte stream. Incomplete frames stay
/// buffered until more bytes arrive.
#[derive(Debug, Clone, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    stats: DecoderStats,
    skipping: bool,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    pub fn push(&mut self, model: &HandModel, bytes: &[u8]) -> Vec<Packet> {
        self.buf.extend_from_slice(bytes);
        let mut out = Vec::new();
        let mut pos = 0;
        loop {
            let rest = &self.buf[pos..];
            if rest.is_empty() {
                break;
            }
            if rest[0] != HEADER[0] || (rest.len() >= 2 && rest[1] != HEADER[1]) {
                self.skip(&mut pos);
                continue;
            }
            if rest.len() < 3 {
                break;
            }
            let len = match rest[2] {
                TYPE_JOINT => JOINT_FRAME_LEN,
                TYPE_STATUS => STATUS_FRAME_LEN,
                _ => {
                    self.skip(&mut pos);
                    continue;
                }
            };
            if rest.len() < len {
                break;
            }
            match decode_frame(model, &rest[..len]) {
                Ok(p) => {
                    self.skipping = false;
                    self.stats.frames += 1;
                    out.push(p);
                    pos += len;
                }
                Err(_) => {
                    // The header may have been payload; rescan from the next byte.
                    self.stats.crc_errors += 1;
                    self.skipping = true;
                    self.stats.resyncs += 1;
                    self.stats.skipped_bytes += 1;
                    pos += 1;
                }
            }
        }
        self.buf.drain(..pos);
        out
    }

    fn skip(&mut self, pos: &mut usize) {
        if !self.skipping {
            self.skipping = true;
            self.stats.resyncs += 1;
        }
        self.stats.skipped_bytes += 1;
        *pos += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc_check_value() {
        assert_eq!(crc16(b"123456789"), 0x29B1);
    }

    #[test]
    fn status_request_layout() {
        let f = encode_status_request();
        assert_eq!(&f[..3], &[0xAA, 0x55, 0x02]);
        let model = HandModel::default_model();
        assert_eq!(decode_frame(&model, &f).unwrap(), Packet::StatusRequest);
    }

    #[test]
    fn ticks_cover_the_range() {
        let model = HandModel::default_model();
        for c in 0..ACTUATED_COUNT {
            let j = model.channel_joint(c);
            assert_eq!(angle_to_tick(&model, c, j.min()), 0);
            assert_eq!(angle_to_tick(&model, c, j.max()), TICK_MAX);
            assert_eq!(angle_to_tick(&model, c, j.max() + 1.0), TICK_MAX);
            assert_eq!(tick_to_angle(&model, c, TICK_MAX), j.max());
            assert_eq!(tick_to_angle(&model, c, 0), j.min());
        }
    }
}
