//! CSV and JSON output.
//!
//! Schemas (one header line, comma separated, floats in shortest round-trip form):
//!
//! * `trials.csv` – [`RECORD_HEADER`], one line per trial.
//! * `aggregate.csv` – [`AGGREGATE_HEADER`], one line per (SIR, SINR, class) cell.
//! * `sweep.csv` – [`SWEEP_HEADER`], one line per (SIR, rate) point.
//! * `manifest.json` – configuration echo, seed scheme, quantiles, crate version.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::campaign::{Aggregate, CampaignOutput, CampaignRecord, CellError, SweepOutput};
use super::config::CampaignConfig;
use crate::error::{Error, Result};
use crate::orbit::{GeometrySample, Histogram, QuantileTable};

pub const RECORD_HEADER: &str = "sir_db,sinr_db,class,trial_index,seed,f0,fdot,fddot,ber,\
bits_compared,bit_errors,subframes_attempted,subframes_decoded,locked,mean_est_doppler_error";
pub const AGGREGATE_HEADER: &str = "sir_db,sinr_db,class,n_trials,mean_ber,ber_se,\
subframes_attempted,subframes_decoded,p_sub,p_sub_se,mean_est_doppler_error";
pub const SWEEP_HEADER: &str = "sir_db,sinr_db,rate,fddot,n_trials,mean_ber,ber_se,\
subframes_attempted,subframes_decoded,p_sub,p_sub_se,mean_est_doppler_error";
pub const QUANTILE_HEADER: &str = "metric,q33,q66,q99";

pub fn write_records<W: Write>(mut w: W, records: &[CampaignRecord]) -> Result<()> {
    writeln!(w, "{RECORD_HEADER}")?;
    for r in records {
        let class = r.class.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sir_db,
            r.sinr_db,
            class,
            r.trial_index,
            r.seed,
            r.f0,
            r.fdot,
            r.fddot,
            r.ber,
            r.bits_compared,
            r.bit_errors,
            r.subframes_attempted,
            r.subframes_decoded,
            r.locked,
            r.mean_est_doppler_error
        )?;
    }
    Ok(())
}

fn stats_fields(a: &Aggregate) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        a.n_trials,
        a.mean_ber,
        a.ber_se,
        a.subframes_attempted,
        a.subframes_decoded,
        a.p_sub,
        a.p_sub_se,
        a.mean_est_doppler_error
    )
}

pub fn write_aggregates<W: Write>(mut w: W, out: &CampaignOutput) -> Result<()> {
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for c in &out.aggregates {
        writeln!(w, "{},{},{},{}", c.sir_db, c.sinr_db, c.class, stats_fields(&c.stats))?;
    }
    Ok(())
}

pub fn write_sweep<W: Write>(mut w: W, out: &SweepOutput) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for p in &out.points {
        writeln!(w, "{},{},{},{},{}", p.sir_db, p.sinr_db, p.rate, p.fddot, stats_fields(&p.stats))?;
    }
    Ok(())
}

pub fn write_quantiles<W: Write>(mut w: W, q: &QuantileTable) -> Result<()> {
    writeln!(w, "{QUANTILE_HEADER}")?;
    writeln!(w, "abs_fdot,{},{},{}", q.rate_q33, q.rate_q66, q.rate_q99)?;
    writeln!(w, "abs_fddot,{},{},{}", q.acc_q33, q.acc_q66, q.acc_q99)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed_scheme: &'static str,
    master_seed: u64,
    config: &'a CampaignConfig,
    config_text: String,
    quantiles: &'a QuantileTable,
    outputs: Vec<&'static str>,
    cell_errors: &'a [CellError],
}

const SEED_SCHEME: &str = "child = splitmix64(parent ^ splitmix64(fnv1a(label))); trial seed label \
'<cell>/trial/<i>' with cell 'cell/<grid index>/<class>' or 'sweep/<sir index>/<rate index>'; \
component labels nav, ofdm, noise, doppler";

fn write_manifest(
    path: &Path,
    command: &str,
    cfg: &CampaignConfig,
    quantiles: &QuantileTable,
    outputs: Vec<&'static str>,
    errors: &[CellError],
) -> Result<()> {
    let m = Manifest {
        tool: "jcap-sim",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed_scheme: SEED_SCHEME,
        master_seed: cfg.master_seed,
        config: cfg,
        config_text: cfg.to_text(),
        quantiles,
        outputs,
        cell_errors: errors,
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &m).map_err(|e| Error::Config(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes `trials.csv`, `aggregate.csv` and `manifest.json` into `dir`.
pub fn write_campaign(dir: &Path, cfg: &CampaignConfig, out: &CampaignOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = create(dir, "trials.csv")?;
    write_records(&mut w, &out.records)?;
    w.flush()?;
    let mut w = create(dir, "aggregate.csv")?;
    write_aggregates(&mut w, out)?;
    w.flush()?;
    write_manifest(
        &dir.join("manifest.json"),
        "campaign",
        cfg,
        &out.quantiles,
        vec!["trials.csv", "aggregate.csv"],
        &out.errors,
    )
}

/// Writes `sweep.csv`, `sweep_trials.csv` and `manifest.json` into `dir`.
pub fn write_sweep_output(dir: &Path, cfg: &CampaignConfig, out: &SweepOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = create(dir, "sweep.csv")?;
    write_sweep(&mut w, out)?;
    w.flush()?;
    let mut w = create(dir, "sweep_trials.csv")?;
    write_records(&mut w, &out.records)?;
    w.flush()?;
    write_manifest(
        &dir.join("manifest.json"),
        "sweep-rate",
        cfg,
        &out.quantiles,
        vec!["sweep.csv", "sweep_trials.csv"],
        &out.errors,
    )
}

/// Writes `quantiles.csv`, `rate_hist.csv`, `acc_hist.csv` and `manifest.json`.
pub fn write_doppler_stats(
    dir: &Path,
    cfg: &CampaignConfig,
    samples: &[GeometrySample],
    quantiles: &QuantileTable,
    bins: usize,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let rates: Vec<f64> = samples.iter().map(|g| g.fdot.abs()).collect();
    let accs: Vec<f64> = samples.iter().map(|g| g.fddot.abs()).collect();
    let max = |v: &[f64]| v.iter().copied().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);

    let mut w = create(dir, "quantiles.csv")?;
    write_quantiles(&mut w, quantiles)?;
    w.flush()?;
    let mut w = create(dir, "rate_hist.csv")?;
    Histogram::new(rates.iter().copied(), 0.0, max(&rates), bins)?.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(dir, "acc_hist.csv")?;
    Histogram::new(accs.iter().copied(), 0.0, max(&accs), bins)?.write_csv(&mut w)?;
    w.flush()?;
    write_manifest(
        &dir.join("manifest.json"),
        "doppler-stats",
        cfg,
        quantiles,
        vec!["quantiles.csv", "rate_hist.csv", "acc_hist.csv"],
        &[],
    )
}
