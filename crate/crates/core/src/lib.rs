//! Roadside camera frames to Decentralized Environmental Notification
//! Messages (DENM).
//!
//! A frame goes through situation detection, bounding-box localisation,
//! depth-based distance estimation and parameter extraction; the result is
//! a validated [`denm::Denm`] encoded with unaligned PER ([`uper`]).
//! Model and depth services sit behind [`providers`] traits so that runs can
//! be replayed from recorded responses. [`telemetry`] and [`eval`] measure
//! the runs.

pub mod agents;
pub mod cli;
pub mod denm;
pub mod eval;
pub mod providers;
pub mod telemetry;
pub mod uper;
