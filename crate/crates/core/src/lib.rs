//! Simulation of a hybrid downlink in which a low-power GPS L1 C/A overlay rides on
//! a 5 MHz OFDM carrier, and of a near-legacy receiver that tracks the overlay
//! under LEO Doppler dynamics.
//!
//! The crate is organised the way the signal flows:
//!
//! * [`gnss`] – C/A Gold codes, a parity-valid NAV message and the sampled L1 C/A overlay.
//! * [`ofdm`] – the CP-OFDM interferer (15 kHz SCS, 25 RB, 7.68 MSps).
//! * [`channel`] – power split, resampling, polynomial Doppler and AWGN.
//! * [`tracking`] – staged FLL-assisted PLL with a carrier-aided DLL.
//! * [`nav_decode`] – bit slicing, polarity/frame sync, parity and scoring.
//! * [`orbit`] – circular-orbit propagation and Doppler dynamic statistics.
//! * [`harness`] – deterministic trials, campaigns, sweeps and their CSV output.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod gnss;
pub mod harness;
pub mod iq;
pub mod nav_decode;
pub mod ofdm;
pub mod orbit;
pub mod stream;
pub mod tracking;

pub use channel::{DopplerProfile, PowerAndNoiseConfig};
pub use error::{Error, Result};
pub use gnss::{CaCode, NavMessage};
pub use harness::{CampaignConfig, CampaignRecord, DynamicClass};
pub use nav_decode::TrialResult;
pub use ofdm::OfdmConfig;
pub use orbit::{GeometrySample, OrbitConfig, QuantileTable};
pub use stream::{SampleSource, SampleStream};
pub use tracking::{EpochOutput, LoopState, StagePlan};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
