//! Vehicle-in-virtual-environment link: a versioned binary state message,
//! the rigid frame transform between the real and virtual worlds, and a
//! localhost UDP session with seeded loss and latency injection.
//!
//! The wire format is this crate's own; it is not the format of any
//! particular simulator or rapid-prototyping unit.

use thiserror::Error;

mod frame;
mod link;
mod message;

pub use frame::{wrap_angle, FrameAnchor, Pose};
pub use link::{default_port, loopback_session, LinkStats, LoopbackConfig, LoopbackReport, Received, DEFAULT_PORT};
pub use message::{StateMessage, MAGIC, PAYLOAD_LEN, WIRE_LEN};

#[derive(Debug, Error)]
pub enum VveError {
    #[error("datagram is {got} bytes, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("bad magic {0:?}")]
    Magic([u8; 4]),
    #[error("field {0} is not finite")]
    NonFinite(&'static str),
    #[error("invalid link setting: {0}")]
    Config(String),
    #[error("socket: {0}")]
    Io(#[from] std::io::Error),
}
