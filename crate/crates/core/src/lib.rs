//! Physical-layer simulator for uplink OTFS-based NOMA with mixed
//! stationary and mobile users, and its iterative SIC turbo receiver.

pub mod analysis;
pub mod channel;
pub mod coding;
pub mod detect;
pub mod effective;
pub mod error;
pub mod exec;
pub mod link;
pub mod modem;
pub mod params;
pub mod pmf;
pub mod selftest;
pub mod sim;
pub mod sparse;
pub mod turbo;

pub use error::{Error, Result};
