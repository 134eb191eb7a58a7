//! Intent-preview middleware for human-robot collaboration.
//!
//! Robots publish planned actions on typed topics of a pull-based log
//! broker. A scheduler shows each plan as a preview right away and releases
//! the real execution after a configurable delay. Spatial anchors relate the
//! viewer's headset, robot markers and hologram adjustments in one frame, and
//! robot models are loaded from URDF/SDF repositories for preview animation.

pub mod anchor;
pub mod assets;
pub mod broker;
pub mod clock;
pub mod config;
pub mod coordinator;
pub mod gateway;
pub mod geometry;
pub mod intent;
pub mod logio;
pub mod message;
pub mod scenario;
pub mod topics;
