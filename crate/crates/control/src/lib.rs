//! Control side of the handtwin hand: the mode state machine and
//! rate-limited control step, the serial command protocol, devices (a
//! simulated loopback and a raw serial port) and the websocket service.

pub mod controller;
pub mod core;
pub mod device;
pub mod error;
pub mod messages;
pub mod protocol;
pub mod server;

pub use controller::{ControlConfig, ControlMode, Controller, ModeName};
pub use core::ControlCore;
pub use device::{Device, LoopbackDevice, SerialDevice};
pub use error::{ControlError, Result};
pub use server::{serve_ws, ServerHandle};
