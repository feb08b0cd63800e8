use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::correlator::{correlate_epoch, EpochPlan, ReplicaCode};
use super::discriminators::{dll_discriminator_scaled, fll_discriminator, pll_discriminator};
use super::filter::{loop_update, Discriminators, LoopState, StagePlan};
use crate::error::{invalid, Result};
use crate::gnss::CaCode;
use crate::stream::SampleSource;

/// Which stages feed the FLL discriminator into the carrier filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FllAssist {
    /// FLL and PLL errors drive the filter jointly in every stage.
    AllStages,
    /// FLL only in the first (widest) stage; a pure third-order PLL afterwards.
    PullIn,
    /// Pure third-order PLL throughout.
    Off,
}

impl std::str::FromStr for FllAssist {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-stages" => Ok(Self::AllStages),
            "pull-in" => Ok(Self::PullIn),
            "off" => Ok(Self::Off),
            _ => invalid(format!("unknown FLL assist mode '{s}' (all-stages, pull-in, off)")),
        }
    }
}

impl std::fmt::Display for FllAssist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AllStages => "all-stages",
            Self::PullIn => "pull-in",
            Self::Off => "off",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackingConfig {
    pub plan: StagePlan,
    /// Early-late spacing (chips).
    pub spacing: f64,
    /// Carrier frequency used for carrier-to-code aiding (Hz).
    pub carrier_hz: f64,
    pub fll_assist: FllAssist,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            plan: StagePlan::default(),
            spacing: 0.5,
            carrier_hz: 2e9,
            fll_assist: FllAssist::AllStages,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if !(self.spacing > 0.0 && self.spacing <= 1.0) {
            return invalid(format!("early-late spacing must lie in (0, 1], got {}", self.spacing));
        }
        if !(self.carrier_hz > 0.0) {
            return invalid("carrier frequency must be positive");
        }
        Ok(())
    }

    fn fll_weight(&self, stage: usize) -> f64 {
        match self.fll_assist {
            FllAssist::AllStages => 1.0,
            FllAssist::PullIn if stage == 0 => 1.0,
            _ => 0.0,
        }
    }
}

/// Acquisition hand-over: code phase (chips) and Doppler (Hz) at the first sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackingInit {
    pub tau0: f64,
    pub f0: f64,
}

/// Telemetry of one coherent integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochOutput {
    /// Epoch start (s from the first sample).
    pub t: f64,
    /// Epoch end (s).
    pub t_end: f64,
    pub bit_index: u64,
    pub stage: usize,
    pub early: Complex64,
    pub prompt: Complex64,
    pub late: Complex64,
    pub prompt_first_half: Complex64,
    pub prompt_second_half: Complex64,
    pub phase_err: f64,
    pub freq_err: f64,
    pub code_err: f64,
    /// Loop Doppler estimate after this epoch's update (Hz).
    pub est_doppler: f64,
    /// Replica code phase at the epoch start (chips).
    pub code_phase: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrackingRun {
    pub epochs: Vec<EpochOutput>,
    pub final_state: Option<LoopState>,
    /// The source ran dry inside an epoch; that epoch is dropped.
    pub truncated: bool,
    /// A discriminator or NCO went non-finite; tracking stopped.
    pub lost_lock: bool,
}

/// Tracks the C/A overlay in `source` from a known initial code phase and Doppler
/// until the source is exhausted.
///
/// Each epoch runs correlate, discriminate and update. Bandwidths follow the stage
/// plan by epoch start time and the integrators carry over between stages.
pub fn run_tracking<S: SampleSource + ?Sized>(
    source: &mut S,
    code: &CaCode,
    init: TrackingInit,
    cfg: &TrackingConfig,
) -> Result<TrackingRun> {
    cfg.validate()?;
    let rate = source.rate();
    let replica = ReplicaCode::new(code);
    let t_int = cfg.plan.integration_time;
    let mut state = LoopState::initial(init.tau0, init.f0, cfg.carrier_hz);
    let mut run = TrackingRun::default();
    let mut buf: Vec<Complex64> = Vec::new();
    let mut consumed: u64 = 0;

    loop {
        let plan = EpochPlan::at(&state, rate);
        buf.resize(plan.samples, Complex64::default());
        let got = fill(source, &mut buf);
        if got < plan.samples {
            run.truncated = got > 0;
            break;
        }
        let t = consumed as f64 / rate;
        let stage = cfg.plan.stage_at(t);
        let bn = cfg.plan.stages[stage].bn;
        let (c, advanced) = correlate_epoch(&buf, rate, &state, &replica, cfg.spacing, &plan);
        consumed += plan.samples as u64;

        let phase_err = pll_discriminator(c.prompt);
        let freq_err = fll_discriminator(c.prompt_first_half, c.prompt_second_half, t_int / 2.0);
        let code_err = dll_discriminator_scaled(c.early, c.late, cfg.spacing);
        let errs = Discriminators { phase: phase_err, freq: freq_err * cfg.fll_weight(stage), code: code_err };
        let code_phase = state.code_phase;
        match loop_update(&advanced, &errs, bn, t_int, cfg.carrier_hz) {
            Ok(s) => state = s,
            Err(_) => {
                run.lost_lock = true;
                break;
            }
        }
        run.epochs.push(EpochOutput {
            t,
            t_end: consumed as f64 / rate,
            bit_index: plan.bit_index,
            stage,
            early: c.early,
            prompt: c.prompt,
            late: c.late,
            prompt_first_half: c.prompt_first_half,
            prompt_second_half: c.prompt_second_half,
            phase_err,
            freq_err,
            code_err,
            est_doppler: state.est_doppler(),
            code_phase,
        });
    }
    run.final_state = Some(state);
    Ok(run)
}

fn fill<S: SampleSource + ?Sized>(source: &mut S, buf: &mut [Complex64]) -> usize {
    let mut got = 0;
    while got < buf.len() {
        let n = source.read(&mut buf[got..]);
        if n == 0 {
            break;
        }
        got += n;
    }
    got
}

/// Per-epoch CSV: `t,I_P,Q_P,est_doppler,code_err,stage`.
pub fn write_telemetry<W: Write>(mut w: W, epochs: &[EpochOutput]) -> std::io::Result<()> {
    writeln!(w, "t,I_P,Q_P,est_doppler,code_err,stage")?;
    for e in epochs {
        writeln!(
            w,
            "{:.6},{:.6e},{:.6e},{:.6},{:.6e},{}",
            e.t, e.prompt.re, e.prompt.im, e.est_doppler, e.code_err, e.stage
        )?;
    }
    Ok(())
}
