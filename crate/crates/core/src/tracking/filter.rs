use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gnss::CA_CHIP_RATE;

// Characteristic parameters of the standard second/third-order loop filters.
const PLL3_OMEGA: f64 = 0.7845;
const FLL2_OMEGA: f64 = 0.53;
const A2: f64 = 1.414;
const A3: f64 = 1.1;
const B3: f64 = 2.4;

/// One bandwidth stage; `duration` may be infinite for the open-ended last stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub duration: f64,
    /// Noise bandwidth (Hz) shared by the FLL, PLL and DLL.
    pub bn: f64,
}

/// Bandwidth schedule of the receiver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
    /// Coherent integration time (s).
    pub integration_time: f64,
}

impl Default for StagePlan {
    fn default() -> Self {
        Self {
            stages: vec![
                Stage { duration: 1.5, bn: 18.0 },
                Stage { duration: 1.5, bn: 7.0 },
                Stage { duration: f64::INFINITY, bn: 2.0 },
            ],
            integration_time: 0.020,
        }
    }
}

impl StagePlan {
    pub fn new(stages: Vec<Stage>, integration_time: f64) -> Result<Self> {
        let plan = Self { stages, integration_time };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return invalid("stage plan needs at least one stage");
        }
        if !(self.integration_time > 0.0 && self.integration_time.is_finite()) {
            return invalid("integration time must be positive");
        }
        for (i, s) in self.stages.iter().enumerate() {
            if !(s.duration > 0.0) {
                return invalid(format!("stage {i} has non-positive duration"));
            }
            if !(s.bn > 0.0 && s.bn.is_finite()) {
                return invalid(format!("stage {i} has invalid bandwidth {}", s.bn));
            }
            if i > 0 && !(s.bn < self.stages[i - 1].bn) {
                return invalid("stage bandwidths must strictly decrease");
            }
        }
        Ok(())
    }

    /// Index of the stage active at time `t` (the last stage extends forever).
    pub fn stage_at(&self, t: f64) -> usize {
        let mut end = 0.0;
        for (i, s) in self.stages.iter().enumerate() {
            end += s.duration;
            if t < end {
                return i;
            }
        }
        self.stages.len() - 1
    }

    pub fn bandwidth_at(&self, t: f64) -> f64 {
        self.stages[self.stage_at(t)].bn
    }
}

/// Numerically controlled oscillators and filter integrators of the tracking loops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LoopState {
    /// Carrier NCO phase (cycles) at the next sample to be processed.
    pub carrier_phase: f64,
    /// Carrier NCO frequency (Hz) used for the next epoch.
    pub carrier_freq: f64,
    /// Frequency-rate integrator (Hz/s).
    pub pll_acc1: f64,
    /// Frequency integrator (Hz).
    pub pll_acc2: f64,
    /// Code NCO phase (chips) at the next sample to be processed.
    pub code_phase: f64,
    /// Code NCO rate (chips/s).
    pub code_freq: f64,
    /// DLL integrator (chips/s).
    pub dll_acc: f64,
}

impl LoopState {
    /// State matching a known code phase and Doppler, as handed over by acquisition.
    pub fn initial(tau0: f64, f0: f64, carrier_hz: f64) -> Self {
        Self {
            carrier_phase: 0.0,
            carrier_freq: f0,
            pll_acc1: 0.0,
            pll_acc2: f0,
            code_phase: tau0,
            code_freq: CA_CHIP_RATE * (1.0 + f0 / carrier_hz),
            dll_acc: 0.0,
        }
    }

    /// Doppler estimate: the carrier NCO frequency commanded for the next epoch.
    ///
    /// Under a Doppler acceleration the third-order loop settles with a constant phase
    /// error, and the proportional path then makes up the difference between `pll_acc2`
    /// and the true Doppler. Only the full command tracks it without bias.
    pub fn est_doppler(&self) -> f64 {
        self.carrier_freq
    }

    pub fn is_finite(&self) -> bool {
        [
            self.carrier_phase,
            self.carrier_freq,
            self.pll_acc1,
            self.pll_acc2,
            self.code_phase,
            self.code_freq,
            self.dll_acc,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Discriminator outputs of one epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Discriminators {
    /// Carrier phase error (cycles).
    pub phase: f64,
    /// Carrier frequency error (Hz).
    pub freq: f64,
    /// Code phase error (chips, positive when the signal leads the replica).
    pub code: f64,
}

/// Error returned when a discriminator produced a non-finite value.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("non-finite discriminator output: loop lost lock")]
pub struct LostLock;

/// FLL-assisted third-order PLL and carrier-aided second-order DLL, one epoch.
///
/// Frequencies are committed for the next epoch; the NCO phases are advanced by the
/// correlator, which knows the exact number of samples per epoch.
pub fn loop_update(
    state: &LoopState,
    err: &Discriminators,
    bn: f64,
    t: f64,
    carrier_hz: f64,
) -> std::result::Result<LoopState, LostLock> {
    if !(err.phase.is_finite() && err.freq.is_finite() && err.code.is_finite()) {
        return Err(LostLock);
    }
    let wp = bn / PLL3_OMEGA;
    let wf = bn / FLL2_OMEGA;
    let wd = bn / FLL2_OMEGA;
    let (pe, fe, ce) = (err.phase, err.freq, err.code);

    let mut s = *state;
    s.pll_acc1 += t * (wp * wp * wp * pe + wf * wf * fe);
    s.pll_acc2 += t * (s.pll_acc1 + A3 * wp * wp * pe + A2 * wf * fe);
    s.carrier_freq = s.pll_acc2 + B3 * wp * pe;

    s.dll_acc += t * wd * wd * ce;
    s.code_freq = CA_CHIP_RATE * (1.0 + s.carrier_freq / carrier_hz) + s.dll_acc + A2 * wd * ce;
    if !s.is_finite() {
        return Err(LostLock);
    }
    Ok(s)
}
