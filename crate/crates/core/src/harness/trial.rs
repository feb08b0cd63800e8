use num_complex::Complex64;
use serde::Serialize;

use super::seed::TrialSeeds;
use crate::channel::{DopplerProfile, DopplerRotator, NoiseSource, PowerAndNoiseConfig, RationalResampler};
use crate::error::{invalid, Result};
use crate::gnss::{build_nav_message, CodeClock, L1caGenerator, NavMessage, NAV_BIT_RATE, SUBFRAME_BITS};
use crate::nav_decode::{decode_and_score, TrialResult};
use crate::ofdm::{OfdmConfig, OfdmGenerator};
use crate::stream::SampleSource;
use crate::tracking::{run_tracking, EpochOutput, TrackingConfig, TrackingInit};

/// Everything about a trial except its SIR, SINR, Doppler and seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialConfig {
    pub prn: u8,
    /// Trial length (s).
    pub duration: f64,
    /// GNSS front-end sample rate (Hz); the 5G stream is resampled to it.
    pub gnss_rate: f64,
    pub ofdm: OfdmConfig,
    /// Receiver bandwidth `B` used for the C/N0 conversion (Hz).
    pub bandwidth_hz: f64,
    /// Dilate the chip clock along with the carrier Doppler.
    pub code_doppler: bool,
    pub tracking: TrackingConfig,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            prn: 1,
            duration: 10.0,
            gnss_rate: 4.092e6,
            ofdm: OfdmConfig::default(),
            bandwidth_hz: 4.092e6,
            code_doppler: true,
            tracking: TrackingConfig::default(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.prn) {
            return invalid(format!("PRN must lie in 1..=32, got {}", self.prn));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return invalid("trial duration must be positive");
        }
        if !(self.bandwidth_hz > 0.0) {
            return invalid("receiver bandwidth must be positive");
        }
        self.ofdm.validate()?;
        self.tracking.validate()
    }

    /// NAV subframes needed to cover the trial plus one bit of slack.
    pub fn nav_subframes(&self) -> usize {
        let bits = (self.duration * NAV_BIT_RATE).ceil() as usize + 1;
        bits.div_ceil(SUBFRAME_BITS)
    }

    pub fn total_samples(&self) -> u64 {
        (self.duration * self.gnss_rate).round() as u64
    }
}

/// The received hybrid downlink, synthesised on demand.
///
/// Per block: `√ρ·gnss + √(1−ρ)·5G` (5G resampled to the GNSS rate and rescaled to
/// unit power), rotated by the Doppler phase, plus AWGN. The trial starts on a
/// subframe edge with zero code phase.
pub struct TrialSignal {
    rate: f64,
    total: u64,
    pos: u64,
    gnss: L1caGenerator,
    fiveg: Option<FivegStream>,
    a_gnss: f64,
    rotator: DopplerRotator,
    noise: NoiseSource,
}

struct FivegStream {
    gen: OfdmGenerator,
    resampler: RationalResampler,
    raw: Vec<Complex64>,
    fifo: Vec<Complex64>,
    head: usize,
    amplitude: f64,
}

impl FivegStream {
    fn new(cfg: &OfdmConfig, out_rate: f64, seed: u64, weight: f64) -> Result<Self> {
        let gen = OfdmGenerator::new(cfg.clone(), seed)?;
        let resampler = RationalResampler::new(cfg.rate, out_rate)?;
        let gain = resampler.power_gain(&cfg.subcarrier_frequencies());
        Ok(Self {
            gen,
            resampler,
            raw: Vec::with_capacity(cfg.samples_per_subframe()),
            fifo: Vec::new(),
            head: 0,
            amplitude: weight / gain.sqrt(),
        })
    }

    fn add_to(&mut self, out: &mut [Complex64]) {
        while self.fifo.len() - self.head < out.len() {
            self.fifo.drain(..self.head);
            self.head = 0;
            self.raw.clear();
            self.gen.next_subframe(&mut self.raw);
            self.resampler.push(&self.raw, &mut self.fifo);
        }
        for (o, f) in out.iter_mut().zip(&self.fifo[self.head..]) {
            *o += f * self.amplitude;
        }
        self.head += out.len();
    }
}

impl TrialSignal {
    pub fn new(
        cfg: &TrialConfig,
        power: &PowerAndNoiseConfig,
        profile: &DopplerProfile,
        seeds: &TrialSeeds,
        nav: NavMessage,
    ) -> Result<Self> {
        let clock = if cfg.code_doppler {
            CodeClock::with_doppler(0.0, *profile, cfg.tracking.carrier_hz)
        } else {
            CodeClock::fixed(0.0)
        };
        let gnss = L1caGenerator::new(cfg.prn, nav, cfg.gnss_rate, clock)?;
        let fiveg = if power.rho < 1.0 {
            Some(FivegStream::new(&cfg.ofdm, cfg.gnss_rate, seeds.ofdm, (1.0 - power.rho).sqrt())?)
        } else {
            None
        };
        Ok(Self {
            rate: cfg.gnss_rate,
            total: cfg.total_samples(),
            pos: 0,
            gnss,
            fiveg,
            a_gnss: power.rho.sqrt(),
            rotator: DopplerRotator::new(*profile, cfg.gnss_rate, 0.0),
            noise: NoiseSource::new(power.noise_power, seeds.noise),
        })
    }

    /// The signal of trial `seed`, plus the NAV message it carries.
    pub fn for_trial(
        cfg: &TrialConfig,
        power: &PowerAndNoiseConfig,
        profile: &DopplerProfile,
        seed: u64,
    ) -> Result<(Self, NavMessage)> {
        cfg.validate()?;
        let seeds = TrialSeeds::from_trial(seed);
        let nav = build_nav_message(seeds.nav, cfg.nav_subframes())?;
        Ok((Self::new(cfg, power, profile, &seeds, nav.clone())?, nav))
    }

    pub fn remaining(&self) -> u64 {
        self.total - self.pos
    }
}

impl SampleSource for TrialSignal {
    fn rate(&self) -> f64 {
        self.rate
    }

    fn read(&mut self, buf: &mut [Complex64]) -> usize {
        // small chunks keep every synthesis pass inside the cache
        const CHUNK: usize = 4096;
        let n = (buf.len() as u64).min(self.remaining()) as usize;
        for out in buf[..n].chunks_mut(CHUNK) {
            self.gnss.fill(self.pos, out);
            for z in out.iter_mut() {
                *z *= self.a_gnss;
            }
            if let Some(f) = self.fiveg.as_mut() {
                f.add_to(out);
            }
            self.rotator.apply(self.pos, out);
            self.noise.add_to(out);
            self.pos += out.len() as u64;
        }
        n
    }
}

/// Result of one trial plus the tracking telemetry behind it.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub result: TrialResult,
    /// Mean `est_doppler − truth` over the epochs of the last stage (Hz).
    pub mean_est_doppler_error: f64,
    pub lost_lock: bool,
    pub epochs: Vec<EpochOutput>,
}

/// Full chain for one trial: synthesise, track from the true initial state, decode
/// and score.
pub fn run_trial(
    cfg: &TrialConfig,
    power: &PowerAndNoiseConfig,
    profile: &DopplerProfile,
    seed: u64,
) -> Result<TrialOutcome> {
    let (mut signal, nav) = TrialSignal::for_trial(cfg, power, profile, seed)?;
    let code = crate::gnss::generate_ca_code(cfg.prn)?;
    let init = TrackingInit { tau0: 0.0, f0: profile.f0 };
    let run = run_tracking(&mut signal, &code, init, &cfg.tracking)?;

    let first_bit = run.epochs.first().map_or(0, |e| e.bit_index as usize);
    let prompts: Vec<Complex64> = run.epochs.iter().map(|e| e.prompt).collect();
    let mut result = decode_and_score(&prompts, first_bit, &nav);
    result.locked &= !run.lost_lock;

    let half = cfg.tracking.plan.integration_time / 2.0;
    let last = cfg.tracking.plan.stages.len() - 1;
    let errors: Vec<f64> = run
        .epochs
        .iter()
        .filter(|e| e.stage == last)
        .map(|e| e.est_doppler - profile.frequency_at(e.t_end + half))
        .collect();
    let mean_est_doppler_error = if errors.is_empty() {
        f64::NAN
    } else {
        errors.iter().sum::<f64>() / errors.len() as f64
    };
    Ok(TrialOutcome { result, mean_est_doppler_error, lost_lock: run.lost_lock, epochs: run.epochs })
}
