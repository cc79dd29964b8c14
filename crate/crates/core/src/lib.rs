//! Monte Carlo assessment of RF-exposure compliance distances for massive
//! MIMO base stations using eigen-beamforming.
//!
//! The pipeline: drop UEs in a sector ([`scenario`]), synthesize their
//! spatial covariances ([`channel`]), derive eigen-beamformers and gain
//! maps ([`beamforming`]), average them over 6-minute windows
//! ([`engine`]), and turn gain percentiles into distances ([`compliance`]).

pub mod antenna;
pub mod app;
pub mod beamforming;
pub mod channel;
pub mod compliance;
pub mod config;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod scenario;

pub use error::{Error, Result};

/// m/s
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
