//! Campaign configuration and its flat `key = value` text form.
//!
//! Lists are comma separated, `#` starts a comment, and unknown keys are errors.
//! [`CampaignConfig::to_text`] writes every key, so a dumped file reloads to the
//! same configuration.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::trial::TrialConfig;
use crate::error::{Error, Result};
use crate::orbit::{DynamicClass, OrbitConfig, ProfileDraw, QuantileTable};
use crate::tracking::Stage;

/// Where the class thresholds come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileSource {
    /// The built-in 1200 km table.
    #[default]
    Reference,
    /// Freshly estimated from the orbit model.
    Estimated,
}

impl FromStr for QuantileSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Self::Reference),
            "estimated" => Ok(Self::Estimated),
            _ => Err(Error::Config(format!("unknown quantile source '{s}'"))),
        }
    }
}

impl Display for QuantileSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Reference => "reference",
            Self::Estimated => "estimated",
        })
    }
}

/// Doppler-rate sweep at fixed acceleration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Rate magnitudes (Hz/s); the sign comes from the profile draw.
    pub rate_min: f64,
    pub rate_max: f64,
    pub rate_step: f64,
    /// Fixed acceleration (Hz/s²); `None` takes the high-class threshold.
    pub fddot: Option<f64>,
    /// The sweep runs at `SINR = SIR − sinr_offset`.
    pub sinr_offset: f64,
    /// Trials per point; `None` uses the campaign's `n_trials`.
    pub n_trials: Option<usize>,
    /// Append a zero-rate control point.
    pub zero_control: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rate_min: 200.0,
            rate_max: 250.0,
            rate_step: 0.5,
            fddot: None,
            sinr_offset: 2.0,
            n_trials: None,
            zero_control: true,
        }
    }
}

impl SweepConfig {
    /// Swept magnitudes from `rate_min` to `rate_max` inclusive, plus 0 for the control.
    pub fn rates(&self) -> Vec<f64> {
        let n = ((self.rate_max - self.rate_min) / self.rate_step + 1e-9).floor() as usize;
        let mut rates: Vec<f64> = (0..=n).map(|k| self.rate_min + k as f64 * self.rate_step).collect();
        if self.zero_control && self.rate_min > 0.0 {
            rates.push(0.0);
        }
        rates
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub sir_db_list: Vec<f64>,
    /// SINR grid as offsets below each SIR (dB); every offset is positive.
    pub sinr_offsets_db: Vec<f64>,
    pub classes: Vec<DynamicClass>,
    pub n_trials: usize,
    pub master_seed: u64,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    pub trial: TrialConfig,
    pub quantile_source: QuantileSource,
    /// Geometry samples when the thresholds are estimated.
    pub quantile_samples: usize,
    pub orbit: OrbitConfig,
    pub profile: ProfileDraw,
    pub sweep: SweepConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            sir_db_list: vec![-10.0, -20.0, -30.0],
            sinr_offsets_db: vec![0.5, 2.0, 5.0, 10.0, 15.0],
            classes: DynamicClass::ALL.to_vec(),
            n_trials: 100,
            master_seed: 1,
            workers: 0,
            trial: TrialConfig::default(),
            quantile_source: QuantileSource::Reference,
            quantile_samples: 100_000,
            orbit: OrbitConfig::default(),
            profile: ProfileDraw::default(),
            sweep: SweepConfig::default(),
        }
    }
}

/// Every configuration key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("sir_db_list", "SIR levels in dB"),
    ("sinr_offsets_db", "SINR grid as offsets below each SIR in dB"),
    ("classes", "dynamic classes to run (low, medium, high)"),
    ("n_trials", "Monte Carlo trials per grid cell"),
    ("master_seed", "seed every trial seed is derived from"),
    ("workers", "worker threads, 0 for one per core"),
    ("duration", "trial length in s"),
    ("prn", "PRN of the overlay"),
    ("gnss_rate", "GNSS sample rate in Hz"),
    ("bandwidth_hz", "receiver bandwidth used for C/N0 in Hz"),
    ("code_doppler", "dilate the chip clock with the carrier Doppler"),
    ("stage_durations", "stage durations in s, last may be inf"),
    ("stage_bandwidths", "stage noise bandwidths in Hz, strictly decreasing"),
    ("integration_time", "coherent integration time in s"),
    ("el_spacing", "early-late spacing in chips"),
    ("fll_assist", "FLL assist mode (all-stages, pull-in, off)"),
    ("fc", "carrier frequency in Hz for Doppler and code aiding"),
    ("quantile_source", "class thresholds (reference, estimated)"),
    ("quantile_samples", "geometry samples for estimated thresholds"),
    ("orbit_altitude", "orbit altitude in m"),
    ("orbit_inclination", "orbit inclination in deg"),
    ("epoch_step", "epoch grid step in s"),
    ("span_periods", "propagated span in orbital periods"),
    ("elevation_mask", "minimum elevation in deg"),
    ("receiver_sampling", "receiver placement (uniform-elevation, area-uniform)"),
    ("f0_span", "initial Doppler is uniform in +-f0_span Hz"),
    ("rate_sign", "sign of the Doppler rate (-1 or 1)"),
    ("acc_sign", "sign of the Doppler acceleration (-1 or 1)"),
    ("sweep_rate_min", "smallest swept rate magnitude in Hz/s"),
    ("sweep_rate_max", "largest swept rate magnitude in Hz/s"),
    ("sweep_rate_step", "sweep step in Hz/s"),
    ("sweep_fddot", "sweep acceleration in Hz/s^2, or q99"),
    ("sweep_sinr_offset", "sweep SINR below SIR in dB"),
    ("sweep_trials", "trials per sweep point, or default for n_trials"),
    ("sweep_zero_control", "append a zero-rate control point"),
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value for {key}: '{v}'")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl CampaignConfig {
    /// Parses a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Sets one key. The stage keys are applied pairwise, so their lengths are
    /// checked in [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let t = &mut self.trial;
        match key {
            "sir_db_list" => self.sir_db_list = parse_list(key, v)?,
            "sinr_offsets_db" => self.sinr_offsets_db = parse_list(key, v)?,
            "classes" => self.classes = parse_list(key, v)?,
            "n_trials" => self.n_trials = parse(key, v)?,
            "master_seed" => self.master_seed = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "duration" => t.duration = parse(key, v)?,
            "prn" => t.prn = parse(key, v)?,
            "gnss_rate" => t.gnss_rate = parse(key, v)?,
            "bandwidth_hz" => t.bandwidth_hz = parse(key, v)?,
            "code_doppler" => t.code_doppler = parse(key, v)?,
            "stage_durations" => {
                let d: Vec<f64> = parse_list(key, v)?;
                let stages = &mut t.tracking.plan.stages;
                stages.resize(d.len(), Stage { duration: 0.0, bn: 0.0 });
                for (s, d) in stages.iter_mut().zip(d) {
                    s.duration = d;
                }
            }
            "stage_bandwidths" => {
                let b: Vec<f64> = parse_list(key, v)?;
                let stages = &mut t.tracking.plan.stages;
                stages.resize(b.len(), Stage { duration: 0.0, bn: 0.0 });
                for (s, b) in stages.iter_mut().zip(b) {
                    s.bn = b;
                }
            }
            "integration_time" => t.tracking.plan.integration_time = parse(key, v)?,
            "el_spacing" => t.tracking.spacing = parse(key, v)?,
            "fll_assist" => t.tracking.fll_assist = parse(key, v)?,
            "fc" => {
                let fc = parse(key, v)?;
                t.tracking.carrier_hz = fc;
                self.orbit.fc = fc;
            }
            "quantile_source" => self.quantile_source = parse(key, v)?,
            "quantile_samples" => self.quantile_samples = parse(key, v)?,
            "orbit_altitude" => self.orbit.altitude = parse(key, v)?,
            "orbit_inclination" => self.orbit.inclination_deg = parse(key, v)?,
            "epoch_step" => self.orbit.epoch_step = parse(key, v)?,
            "span_periods" => self.orbit.span_periods = parse(key, v)?,
            "elevation_mask" => self.orbit.elevation_mask_deg = parse(key, v)?,
            "receiver_sampling" => self.orbit.sampling = parse(key, v)?,
            "f0_span" => self.profile.f0_span = parse(key, v)?,
            "rate_sign" => self.profile.rate_sign = parse(key, v)?,
            "acc_sign" => self.profile.acc_sign = parse(key, v)?,
            "sweep_rate_min" => self.sweep.rate_min = parse(key, v)?,
            "sweep_rate_max" => self.sweep.rate_max = parse(key, v)?,
            "sweep_rate_step" => self.sweep.rate_step = parse(key, v)?,
            "sweep_fddot" => {
                self.sweep.fddot = if v == "q99" { None } else { Some(parse(key, v)?) }
            }
            "sweep_sinr_offset" => self.sweep.sinr_offset = parse(key, v)?,
            "sweep_trials" => {
                self.sweep.n_trials = if v == "default" { None } else { Some(parse(key, v)?) }
            }
            "sweep_zero_control" => self.sweep.zero_control = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let t = &self.trial;
        let plan = &t.tracking.plan;
        let durations: Vec<f64> = plan.stages.iter().map(|s| s.duration).collect();
        let bws: Vec<f64> = plan.stages.iter().map(|s| s.bn).collect();
        let value = |key: &str| -> String {
            match key {
                "sir_db_list" => join(&self.sir_db_list),
                "sinr_offsets_db" => join(&self.sinr_offsets_db),
                "classes" => join(&self.classes),
                "n_trials" => self.n_trials.to_string(),
                "master_seed" => self.master_seed.to_string(),
                "workers" => self.workers.to_string(),
                "duration" => t.duration.to_string(),
                "prn" => t.prn.to_string(),
                "gnss_rate" => t.gnss_rate.to_string(),
                "bandwidth_hz" => t.bandwidth_hz.to_string(),
                "code_doppler" => t.code_doppler.to_string(),
                "stage_durations" => join(&durations),
                "stage_bandwidths" => join(&bws),
                "integration_time" => plan.integration_time.to_string(),
                "el_spacing" => t.tracking.spacing.to_string(),
                "fll_assist" => t.tracking.fll_assist.to_string(),
                "fc" => t.tracking.carrier_hz.to_string(),
                "quantile_source" => self.quantile_source.to_string(),
                "quantile_samples" => self.quantile_samples.to_string(),
                "orbit_altitude" => self.orbit.altitude.to_string(),
                "orbit_inclination" => self.orbit.inclination_deg.to_string(),
                "epoch_step" => self.orbit.epoch_step.to_string(),
                "span_periods" => self.orbit.span_periods.to_string(),
                "elevation_mask" => self.orbit.elevation_mask_deg.to_string(),
                "receiver_sampling" => self.orbit.sampling.to_string(),
                "f0_span" => self.profile.f0_span.to_string(),
                "rate_sign" => self.profile.rate_sign.to_string(),
                "acc_sign" => self.profile.acc_sign.to_string(),
                "sweep_rate_min" => self.sweep.rate_min.to_string(),
                "sweep_rate_max" => self.sweep.rate_max.to_string(),
                "sweep_rate_step" => self.sweep.rate_step.to_string(),
                "sweep_fddot" => self.sweep.fddot.map_or("q99".into(), |x| x.to_string()),
                "sweep_sinr_offset" => self.sweep.sinr_offset.to_string(),
                "sweep_trials" => self.sweep.n_trials.map_or("default".into(), |x| x.to_string()),
                "sweep_zero_control" => self.sweep.zero_control.to_string(),
                _ => unreachable!("key list and formatter out of sync: {key}"),
            }
        };
        KEYS.iter().map(|(k, _)| format!("{k} = {}\n", value(k))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.sir_db_list.is_empty() || self.sir_db_list.iter().any(|s| s.is_nan()) {
            return bad("sir_db_list must hold at least one SIR");
        }
        if self.sinr_offsets_db.is_empty() || self.sinr_offsets_db.iter().any(|o| !(*o > 0.0)) {
            return bad("sinr_offsets_db must be positive so every SINR lies below its SIR");
        }
        if self.classes.is_empty() {
            return bad("classes must name at least one dynamic class");
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1");
        }
        self.trial.validate()?;
        self.orbit.validate()?;
        self.profile.validate()?;
        let s = &self.sweep;
        if !(s.rate_step > 0.0) || !(s.rate_min >= 0.0) || !(s.rate_max >= s.rate_min) {
            return bad("sweep needs 0 <= rate_min <= rate_max and a positive step");
        }
        if !(s.sinr_offset > 0.0) {
            return bad("sweep_sinr_offset must be positive");
        }
        if s.fddot.is_some_and(|a| !a.is_finite()) || s.n_trials == Some(0) {
            return bad("sweep_fddot must be finite and sweep_trials at least 1");
        }
        Ok(())
    }

    /// `(sir, sinr)` grid in run order.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.sir_db_list
            .iter()
            .flat_map(|&sir| self.sinr_offsets_db.iter().map(move |&o| (sir, sir - o)))
            .collect()
    }

    pub fn sweep_trials(&self) -> usize {
        self.sweep.n_trials.unwrap_or(self.n_trials)
    }

    /// Acceleration used by the sweep for the given class table.
    pub fn sweep_fddot(&self, table: &QuantileTable) -> f64 {
        self.sweep.fddot.unwrap_or(table.acc_q99)
    }
}
