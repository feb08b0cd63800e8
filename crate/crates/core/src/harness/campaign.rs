//! Campaign grids and Doppler-rate sweeps.
//!
//! Every trial is an independent work unit run on a bounded pool. Results are
//! collected in job order and folded afterwards, so the output does not depend on
//! scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CampaignConfig, QuantileSource};
use super::seed::{derive_seed, TrialSeeds};
use super::trial::run_trial;
use crate::channel::{DopplerProfile, PowerAndNoiseConfig};
use crate::error::{Error, Result};
use crate::orbit::{draw_profile, estimate_quantiles, DynamicClass, QuantileTable};

/// Called with `(finished, total)` after every trial.
pub type Progress = dyn Fn(usize, usize) + Sync;

/// One trial of a campaign or sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignRecord {
    pub sir_db: f64,
    pub sinr_db: f64,
    /// `None` for sweep trials, whose dynamics are set by the swept rate.
    pub class: Option<DynamicClass>,
    pub trial_index: usize,
    pub seed: u64,
    pub f0: f64,
    pub fdot: f64,
    pub fddot: f64,
    pub ber: f64,
    pub bits_compared: usize,
    pub bit_errors: usize,
    pub subframes_attempted: usize,
    pub subframes_decoded: usize,
    pub locked: bool,
    pub mean_est_doppler_error: f64,
}

/// Mean BER and subframe success of one group of trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub n_trials: usize,
    pub mean_ber: f64,
    /// Standard error of the mean BER.
    pub ber_se: f64,
    pub subframes_attempted: usize,
    pub subframes_decoded: usize,
    pub p_sub: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub p_sub_se: f64,
    /// Mean over trials with a finite value (Hz).
    pub mean_est_doppler_error: f64,
}

impl Aggregate {
    pub fn of(records: &[CampaignRecord]) -> Self {
        let n = records.len();
        let nf = n.max(1) as f64;
        let mean_ber = records.iter().map(|r| r.ber).sum::<f64>() / nf;
        let ber_se = if n > 1 {
            let var = records.iter().map(|r| (r.ber - mean_ber).powi(2)).sum::<f64>() / (nf - 1.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        let attempted: usize = records.iter().map(|r| r.subframes_attempted).sum();
        let decoded: usize = records.iter().map(|r| r.subframes_decoded).sum();
        let (p_sub, p_sub_se) = binomial(decoded, attempted);
        let finite: Vec<f64> = records
            .iter()
            .map(|r| r.mean_est_doppler_error)
            .filter(|e| e.is_finite())
            .collect();
        let mean_est_doppler_error = if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        Self {
            n_trials: n,
            mean_ber,
            ber_se,
            subframes_attempted: attempted,
            subframes_decoded: decoded,
            p_sub,
            p_sub_se,
            mean_est_doppler_error,
        }
    }
}

/// Success fraction and its binomial standard error; `(NaN, NaN)` when `n = 0`.
pub fn binomial(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellAggregate {
    pub sir_db: f64,
    pub sinr_db: f64,
    pub class: DynamicClass,
    #[serde(flatten)]
    pub stats: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sir_db: f64,
    pub sinr_db: f64,
    /// Signed Doppler rate (Hz/s).
    pub rate: f64,
    pub fddot: f64,
    #[serde(flatten)]
    pub stats: Aggregate,
}

/// A grid cell that could not be run; the rest of the campaign is unaffected.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellError {
    pub sir_db: f64,
    pub sinr_db: f64,
    pub label: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignOutput {
    pub quantiles: QuantileTable,
    pub records: Vec<CampaignRecord>,
    pub aggregates: Vec<CellAggregate>,
    pub errors: Vec<CellError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub quantiles: QuantileTable,
    pub records: Vec<CampaignRecord>,
    pub points: Vec<SweepPoint>,
    pub errors: Vec<CellError>,
}

/// Class thresholds for this configuration.
pub fn resolve_quantiles(cfg: &CampaignConfig) -> Result<QuantileTable> {
    match cfg.quantile_source {
        QuantileSource::Reference => Ok(QuantileTable::REFERENCE),
        QuantileSource::Estimated => {
            estimate_quantiles(&cfg.orbit, cfg.quantile_samples, quantile_seed(cfg))
        }
    }
}

/// Seed of the geometry draws behind estimated thresholds and Doppler statistics.
pub fn quantile_seed(cfg: &CampaignConfig) -> u64 {
    derive_seed(cfg.master_seed, "quantiles")
}

/// Seed of trial `i` in the cell labelled `cell`.
pub fn trial_seed(master: u64, cell: &str, i: usize) -> u64 {
    derive_seed(master, &format!("{cell}/trial/{i}"))
}

struct Job {
    group: usize,
    index: usize,
    seed: u64,
    power: PowerAndNoiseConfig,
    profile: DopplerProfile,
}

struct Group {
    sir_db: f64,
    sinr_db: f64,
    label: String,
    class: Option<DynamicClass>,
    /// Signed rate and acceleration of a sweep point.
    dynamics: (f64, f64),
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs all jobs and returns, per group, either its records in trial order or the
/// first error that hit it.
fn execute(
    cfg: &CampaignConfig,
    groups: &[Group],
    jobs: Vec<Job>,
    progress: Option<&Progress>,
) -> Result<Vec<std::result::Result<Vec<CampaignRecord>, String>>> {
    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let results: Vec<(usize, Result<CampaignRecord>)> = pool(cfg.workers)?.install(|| {
        jobs.into_par_iter()
            .map(|job| {
                let g = &groups[job.group];
                let out = run_trial(&cfg.trial, &job.power, &job.profile, job.seed).map(|o| {
                    CampaignRecord {
                        sir_db: g.sir_db,
                        sinr_db: g.sinr_db,
                        class: g.class,
                        trial_index: job.index,
                        seed: job.seed,
                        f0: job.profile.f0,
                        fdot: job.profile.fdot,
                        fddot: job.profile.fddot,
                        ber: o.result.ber,
                        bits_compared: o.result.bits_compared,
                        bit_errors: o.result.bit_errors,
                        subframes_attempted: o.result.subframes_attempted,
                        subframes_decoded: o.result.subframes_decoded,
                        locked: o.result.locked,
                        mean_est_doppler_error: o.mean_est_doppler_error,
                    }
                });
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(p) = progress {
                    p(n, total);
                }
                (job.group, out)
            })
            .collect()
    });

    let mut per_group: Vec<std::result::Result<Vec<CampaignRecord>, String>> =
        groups.iter().map(|_| Ok(Vec::new())).collect();
    for (g, r) in results {
        match (&mut per_group[g], r) {
            (Ok(v), Ok(rec)) => v.push(rec),
            (slot @ Ok(_), Err(e)) => *slot = Err(e.to_string()),
            (Err(_), _) => {}
        }
    }
    Ok(per_group)
}

fn cell_error(g: &Group, message: String) -> CellError {
    CellError { sir_db: g.sir_db, sinr_db: g.sinr_db, label: g.label.clone(), message }
}

/// SIR × SINR × class grid with `n_trials` trials per cell.
pub fn run_campaign(cfg: &CampaignConfig, progress: Option<&Progress>) -> Result<CampaignOutput> {
    cfg.validate()?;
    let quantiles = resolve_quantiles(cfg)?;
    let mut groups = Vec::new();
    let mut jobs = Vec::new();
    let mut errors = Vec::new();

    for (gi, (sir, sinr)) in cfg.grid().into_iter().enumerate() {
        for &class in &cfg.classes {
            let label = format!("cell/{gi}/{class}");
                        let dynamics = class.thresholds(&quantiles);
            let group = Group { sir_db: sir, sinr_db: sinr, label, class: Some(class), dynamics };
            match PowerAndNoiseConfig::new(sir, sinr, cfg.trial.bandwidth_hz) {
                Ok(power) => {
                    for i in 0..cfg.n_trials {
                        let seed = trial_seed(cfg.master_seed, &group.label, i);
                        let draw = TrialSeeds::from_trial(seed).doppler;
                        let profile = draw_profile(class, &quantiles, &cfg.profile, draw)?;
                        jobs.push(Job { group: groups.len(), index: i, seed, power, profile });
                    }
                }
                Err(e) => errors.push(cell_error(&group, e.to_string())),
            }
            groups.push(group);
        }
    }

    let per_group = execute(cfg, &groups, jobs, progress)?;
    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    for (g, res) in groups.iter().zip(per_group) {
        if errors.iter().any(|e| e.label == g.label) {
            continue;
        }
        match res {
            Ok(recs) => {
                aggregates.push(CellAggregate {
                    sir_db: g.sir_db,
                    sinr_db: g.sinr_db,
                    class: g.class.expect("campaign cells carry a class"),
                    stats: Aggregate::of(&recs),
                });
                records.extend(recs);
            }
            Err(message) => errors.push(cell_error(g, message)),
        }
    }
    Ok(CampaignOutput { quantiles, records, aggregates, errors })
}

/// P_sub versus Doppler rate at fixed acceleration, per SIR.
pub fn sweep_doppler_rate(cfg: &CampaignConfig, progress: Option<&Progress>) -> Result<SweepOutput> {
    cfg.validate()?;
    let quantiles = resolve_quantiles(cfg)?;
    let fddot = cfg.sweep_fddot(&quantiles);
    let rates = cfg.sweep.rates();
    let n = cfg.sweep_trials();
    let mut groups = Vec::new();
    let mut jobs = Vec::new();
    let mut errors = Vec::new();

    for (si, &sir) in cfg.sir_db_list.iter().enumerate() {
        let sinr = sir - cfg.sweep.sinr_offset;
        for (ri, &mag) in rates.iter().enumerate() {
            // + 0.0 keeps the zero-rate control from printing as -0
            let rate = cfg.profile.rate_sign * mag + 0.0;
            let acc = cfg.profile.acc_sign * fddot.abs();
            let label = format!("sweep/{si}/{ri}");
            let group = Group { sir_db: sir, sinr_db: sinr, label, class: None, dynamics: (rate, acc) };
            match PowerAndNoiseConfig::new(sir, sinr, cfg.trial.bandwidth_hz) {
                Ok(power) => {
                    for i in 0..n {
                        let seed = trial_seed(cfg.master_seed, &group.label, i);
                        let f0 = cfg.profile.draw_f0(TrialSeeds::from_trial(seed).doppler);
                        let profile = DopplerProfile::new(f0, rate, acc)?;
                        jobs.push(Job { group: groups.len(), index: i, seed, power, profile });
                    }
                }
                Err(e) => errors.push(cell_error(&group, e.to_string())),
            }
            groups.push(group);
        }
    }

    let per_group = execute(cfg, &groups, jobs, progress)?;
    let mut records = Vec::new();
    let mut points = Vec::new();
    for (g, res) in groups.iter().zip(per_group) {
        if errors.iter().any(|e| e.label == g.label) {
            continue;
        }
        match res {
            Ok(recs) => {
                points.push(SweepPoint {
                    sir_db: g.sir_db,
                    sinr_db: g.sinr_db,
                    rate: g.dynamics.0,
                    fddot: g.dynamics.1,
                    stats: Aggregate::of(&recs),
                });
                records.extend(recs);
            }
            Err(message) => errors.push(cell_error(g, message)),
        }
    }
    Ok(SweepOutput { quantiles, records, points, errors })
}

/// Every seed a campaign would consume: trial seeds and their component sub-seeds.
pub fn campaign_seeds(cfg: &CampaignConfig) -> Vec<u64> {
    let mut seeds = Vec::new();
    for (gi, _) in cfg.grid().iter().enumerate() {
        for class in &cfg.classes {
            for i in 0..cfg.n_trials {
                let s = trial_seed(cfg.master_seed, &format!("cell/{gi}/{class}"), i);
                seeds.push(s);
                seeds.extend(TrialSeeds::from_trial(s).all());
            }
        }
    }
    seeds
}
