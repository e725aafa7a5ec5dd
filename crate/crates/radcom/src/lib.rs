//! Cooperative multistatic joint radar-and-communication network simulator.
//!
//! Synthesizes OFDM echoes across all transmitter-receiver pairs of a
//! distributed access-point deployment, fuses them into spatial ambiguity
//! maps under configurable clock-synchronization regimes, and quantifies
//! both sensing resolution and communication reliability from the same
//! waveform.

pub mod channel;
pub mod clocksync;
pub mod commlink;
pub mod config;
pub mod experiment;
pub mod fusion;
pub mod linkproc;
pub mod report;
pub mod scene;
pub mod seeds;
pub mod waveform;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use num_complex::Complex64;
