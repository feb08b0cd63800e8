//! Deterministic Monte Carlo trials, campaigns and sweeps.

pub mod campaign;
pub mod config;
pub mod report;
pub mod seed;
pub mod trial;

pub use crate::orbit::DynamicClass;
pub use campaign::{
    binomial, run_campaign, sweep_doppler_rate, Aggregate, CampaignOutput, CampaignRecord,
    CellAggregate, CellError, SweepOutput, SweepPoint,
};
pub use config::{CampaignConfig, QuantileSource, SweepConfig};
pub use seed::{derive_seed, TrialSeeds};
pub use trial::{run_trial, TrialConfig, TrialOutcome, TrialSignal};
