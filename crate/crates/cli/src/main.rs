use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Arg, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use jcap_core::channel::{DopplerProfile, PowerAndNoiseConfig};
use jcap_core::harness::campaign::{quantile_seed, resolve_quantiles};
use jcap_core::harness::config::KEYS;
use jcap_core::harness::{report, run_campaign, run_trial, sweep_doppler_rate, TrialSeeds, TrialSignal};
use jcap_core::iq::write_iq_source;
use jcap_core::orbit::{quantiles_of, sample_many, DynamicClass};
use jcap_core::tracking::write_telemetry;
use jcap_core::CampaignConfig;

/// Monte Carlo simulation of a GPS L1 C/A overlay on a 5G OFDM downlink under LEO Doppler.
///
/// Every configuration key can be given in a `--config` file (`key = value`) or as a
/// flag of the same name with dashes; flags win over the file.
#[derive(Parser)]
#[command(name = "jcap-sim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (the `master_seed` key).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core (the `workers` key).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// No progress output on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the SIR × SINR × class grid and write trials.csv, aggregate.csv and manifest.json.
    Campaign {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Sweep the Doppler rate at fixed acceleration and write sweep.csv.
    SweepRate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Sample orbit geometries and write Doppler rate/acceleration quantiles and histograms.
    DopplerStats {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Histogram bins.
        #[arg(long, default_value_t = 100)]
        bins: usize,
    },
    /// Run one trial and print its result; optionally dump telemetry and raw I/Q.
    Trial {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        sir: f64,
        #[arg(long, default_value_t = -12.0, allow_negative_numbers = true)]
        sinr: f64,
        /// Dynamic class giving the Doppler rate and acceleration.
        #[arg(long, default_value = "low")]
        class: DynamicClass,
        /// Doppler rate override (Hz/s, signed).
        #[arg(long, allow_negative_numbers = true)]
        rate: Option<f64>,
        /// Doppler acceleration override (Hz/s², signed).
        #[arg(long, allow_negative_numbers = true)]
        fddot: Option<f64>,
        /// Initial Doppler override (Hz).
        #[arg(long, allow_negative_numbers = true)]
        f0: Option<f64>,
        /// Per-epoch tracking telemetry CSV.
        #[arg(long, value_name = "PATH")]
        telemetry: Option<PathBuf>,
        /// Raw cf32 I/Q of the received signal (with a .hdr sidecar).
        #[arg(long, value_name = "PATH")]
        iq: Option<PathBuf>,
    },
    /// Print the effective configuration in config-file form.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

/// Config keys that are exposed through a dedicated flag instead.
const DEDICATED: [&str; 2] = ["master_seed", "workers"];

fn key_flag(key: &str) -> String {
    key.replace('_', "-")
}

fn command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |mut sub| {
            for (key, help) in KEYS.iter().filter(|(k, _)| !DEDICATED.contains(k)) {
                sub = sub.arg(
                    Arg::new(*key)
                        .long(key_flag(key))
                        .value_name("VALUE")
                        .allow_hyphen_values(true)
                        .help(*help)
                        .help_heading("Configuration keys"),
                );
            }
            sub
        });
    }
    cmd
}

fn build_config(common: &Common, m: &ArgMatches) -> Result<CampaignConfig> {
    let mut cfg = match &common.config {
        Some(p) => CampaignConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => CampaignConfig::default(),
    };
    for (key, _) in KEYS.iter().filter(|(k, _)| !DEDICATED.contains(k)) {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v).with_context(|| format!("--{}", key_flag(key)))?;
        }
    }
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn progress(quiet: bool) -> impl Fn(usize, usize) + Sync {
    move |done, total| {
        if quiet || total == 0 {
            return;
        }
        if done * 100 / total != (done - 1) * 100 / total || done == total {
            eprint!("\r{done}/{total} trials");
            if done == total {
                eprintln!();
            }
        }
    }
}

fn report_errors(errors: &[jcap_core::harness::CellError]) {
    for e in errors {
        eprintln!("cell {} (SIR {} dB, SINR {} dB) skipped: {}", e.label, e.sir_db, e.sinr_db, e.message);
    }
}

fn campaign(common: &Common, m: &ArgMatches, out: &Path) -> Result<()> {
    let cfg = build_config(common, m)?;
    let res = run_campaign(&cfg, Some(&progress(common.quiet)))?;
    report::write_campaign(out, &cfg, &res)?;
    report_errors(&res.errors);
    println!("{:>8} {:>8} {:>7} {:>10} {:>7}", "SIR", "SINR", "class", "BER", "P_sub");
    for c in &res.aggregates {
        println!(
            "{:>8} {:>8} {:>7} {:>10.3e} {:>7.3}",
            c.sir_db, c.sinr_db, c.class, c.stats.mean_ber, c.stats.p_sub
        );
    }
    println!("{} trials written to {}", res.records.len(), out.display());
    Ok(())
}

fn sweep(common: &Common, m: &ArgMatches, out: &Path) -> Result<()> {
    let cfg = build_config(common, m)?;
    let res = sweep_doppler_rate(&cfg, Some(&progress(common.quiet)))?;
    report::write_sweep_output(out, &cfg, &res)?;
    report_errors(&res.errors);
    println!("{:>8} {:>10} {:>7}", "SIR", "rate", "P_sub");
    for p in &res.points {
        println!("{:>8} {:>10} {:>7.3}", p.sir_db, p.rate, p.stats.p_sub);
    }
    println!("{} sweep points written to {}", res.points.len(), out.display());
    Ok(())
}

fn doppler_stats(common: &Common, m: &ArgMatches, out: &Path, bins: usize) -> Result<()> {
    if bins == 0 {
        bail!("--bins must be at least 1");
    }
    let cfg = build_config(common, m)?;
    let samples = sample_many(&cfg.orbit, cfg.quantile_samples, quantile_seed(&cfg))?;
    let q = quantiles_of(&samples);
    report::write_doppler_stats(out, &cfg, &samples, &q, bins)?;
    println!("{} geometries ({} receivers)", samples.len(), cfg.orbit.sampling);
    println!("|fdot|  q33 {:.2}  q66 {:.2}  q99 {:.2} Hz/s", q.rate_q33, q.rate_q66, q.rate_q99);
    println!("|fddot| q33 {:.3}  q66 {:.3}  q99 {:.3} Hz/s^2", q.acc_q33, q.acc_q66, q.acc_q99);
    Ok(())
}

fn trial(
    common: &Common,
    m: &ArgMatches,
    (sir, sinr): (f64, f64),
    class: DynamicClass,
    overrides: (Option<f64>, Option<f64>, Option<f64>),
    telemetry: Option<&Path>,
    iq: Option<&Path>,
) -> Result<()> {
    let cfg = build_config(common, m)?;
    let seed = cfg.master_seed;
    let table = resolve_quantiles(&cfg)?;
    let (class_rate, class_acc) = class.thresholds(&table);
    let (rate, fddot, f0) = overrides;
    let profile = DopplerProfile::new(
        f0.unwrap_or_else(|| cfg.profile.draw_f0(TrialSeeds::from_trial(seed).doppler)),
        rate.unwrap_or(cfg.profile.rate_sign * class_rate),
        fddot.unwrap_or(cfg.profile.acc_sign * class_acc),
    )?;
    let power = PowerAndNoiseConfig::new(sir, sinr, cfg.trial.bandwidth_hz)?;

    let outcome = run_trial(&cfg.trial, &power, &profile, seed)?;
    if let Some(path) = telemetry {
        let mut w = BufWriter::new(File::create(path)?);
        write_telemetry(&mut w, &outcome.epochs)?;
        w.flush()?;
    }
    if let Some(path) = iq {
        let (mut signal, _) = TrialSignal::for_trial(&cfg.trial, &power, &profile, seed)?;
        let n = write_iq_source(path, &mut signal, 0.0, cfg.trial.prn, seed)?;
        eprintln!("{n} samples written to {}", path.display());
    }
    let summary = serde_json::json!({
        "seed": seed,
        "sir_db": sir,
        "sinr_db": sinr,
        "profile": profile,
        "result": outcome.result,
        "mean_est_doppler_error": outcome.mean_est_doppler_error,
        "epochs": outcome.epochs.len(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn main() -> Result<()> {
    let matches = command().get_matches();
    let cli = Cli::from_arg_matches(&matches)?;
    let (_, sub) = matches.subcommand().expect("a subcommand is required");
    match &cli.cmd {
        Cmd::Campaign { common, out } => campaign(common, sub, out),
        Cmd::SweepRate { common, out } => sweep(common, sub, out),
        Cmd::DopplerStats { common, out, bins } => doppler_stats(common, sub, out, *bins),
        Cmd::Trial { common, sir, sinr, class, rate, fddot, f0, telemetry, iq } => trial(
            common,
            sub,
            (*sir, *sinr),
            *class,
            (*rate, *fddot, *f0),
            telemetry.as_deref(),
            iq.as_deref(),
        ),
        Cmd::Config { common } => {
            print!("{}", build_config(common, sub)?.to_text());
            Ok(())
        }
    }
}
