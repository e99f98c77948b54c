//! System-level simulator of connected-mode mobility in a beamformed 5G
//! macro network.
//!
//! A hexagonal multi-site deployment serves randomly walking UEs through
//! sectorized grid-of-beams arrays. Per-step beam RSRPs run through the
//! standard measurement chain (L1 averaging, best-beam consolidation, L3
//! smoothing), drive A3 handovers with preparation and interruption delays,
//! and are logged alongside SINR and FTP throughput. Everything is
//! deterministic for a given scenario and seed, including across antenna
//! element counts, so sweeps isolate the beamforming effect.

pub mod antenna;
pub mod channel;
pub mod config;
pub mod engine;
pub mod geo;
pub mod handover;
pub mod mobility;
pub mod output;
pub mod rrm;
pub mod units;

pub use config::{parse_config, ConfigError, ScenarioConfig};
