//! Staged FLL-assisted PLL and carrier-aided DLL operating on 20 ms bit-aligned epochs.

mod correlator;
mod discriminators;
mod filter;
mod tracker;

pub use correlator::{correlate_epoch, Correlations, EpochPlan, ReplicaCode};
pub use discriminators::{dll_discriminator, dll_discriminator_scaled, fll_discriminator, pll_discriminator};
pub use filter::{loop_update, Discriminators, LoopState, LostLock, Stage, StagePlan};
pub use tracker::{
    run_tracking, write_telemetry, EpochOutput, FllAssist, TrackingConfig, TrackingInit, TrackingRun,
};
