//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 6 and 7 are Monte Carlo runs of roughly half an hour and an hour on a
//! single core; `JCAP_ACCEPTANCE_SKIP=6,7` skips selected criteria.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jcap_core::channel::{add_awgn, combine, RationalResampler};
use jcap_core::gnss::{build_nav_message, encode_word, generate_ca_code, parity_check_word, sample_l1ca};
use jcap_core::harness::{report, run_campaign, run_trial, sweep_doppler_rate, CampaignOutput, TrialConfig};
use jcap_core::ofdm::generate_ofdm_downlink;
use jcap_core::orbit::estimate_quantiles;
use jcap_core::{
    CampaignConfig, DopplerProfile, DynamicClass, OfdmConfig, OrbitConfig, PowerAndNoiseConfig,
    QuantileTable, SampleStream,
};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

// Chip delays of the G2 output per PRN; an independent construction from the
// register tap pairs used in the library.
const G2_DELAY: [usize; 32] = [
    5, 6, 7, 8, 17, 18, 139, 140, 141, 251, 252, 254, 255, 256, 257, 258, 469, 470, 471, 472,
    473, 474, 509, 512, 513, 514, 515, 516, 859, 860, 861, 862,
];

fn mls(taps: &[usize]) -> Vec<u8> {
    let mut reg = [1u8; 10];
    (0..1023)
        .map(|_| {
            let out = reg[9];
            let fb = taps.iter().fold(0, |a, &t| a ^ reg[t - 1]);
            reg.rotate_right(1);
            reg[0] = fb;
            out
        })
        .collect()
}

fn criterion_1() -> Verdict {
    let g1 = mls(&[3, 10]);
    let g2 = mls(&[2, 3, 6, 8, 9, 10]);
    let mut codes = Vec::new();
    for prn in 1..=32u8 {
        let code = generate_ca_code(prn).unwrap();
        let d = G2_DELAY[prn as usize - 1];
        let oracle: Vec<u8> = (0..1023).map(|k| g1[k] ^ g2[(k + 1023 - d) % 1023]).collect();
        if code.binary().collect::<Vec<_>>() != oracle {
            return Verdict::new(false, format!("PRN {prn} differs from the G2-delay construction"));
        }
        codes.push(code.chips().iter().map(|&c| c as i32).collect::<Vec<i32>>());
    }
    let head = codes[0][..10].iter().fold(0u32, |a, &c| (a << 1) | u32::from(c < 0));
    if format!("{head:o}") != "1440" {
        return Verdict::new(false, format!("PRN 1 first ten chips {head:o} (octal), expected 1440"));
    }

    let mut bad = 0usize;
    for (i, a) in codes.iter().enumerate() {
        let doubled: Vec<i32> = a.iter().chain(a.iter()).copied().collect();
        for (j, b) in codes.iter().enumerate() {
            for lag in 0..1023 {
                let r: i32 = b.iter().zip(&doubled[lag..lag + 1023]).map(|(x, y)| x * y).sum();
                let ok = if i == j && lag == 0 { r == 1023 } else { matches!(r, -65 | -1 | 63) };
                bad += usize::from(!ok);
            }
        }
    }
    Verdict::new(bad == 0, format!("32 PRNs match the oracle, {bad} correlation values outside {{-65,-1,63}}"))
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut d29, mut d30) = (0u8, 0u8);
    let (mut round_trip_failures, mut undetected) = (0usize, 0usize);
    for _ in 0..10_000 {
        let data: u32 = rng.random::<u32>() & 0x00ff_ffff;
        let word = encode_word(data, d29, d30);
        if parity_check_word(word, d29, d30) != Ok(data) {
            round_trip_failures += 1;
        }
        let flipped = word ^ (1 << rng.random_range(0..30));
        if parity_check_word(flipped, d29, d30).is_ok() {
            undetected += 1;
        }
        (d29, d30) = (((word >> 1) & 1) as u8, (word & 1) as u8);
    }
    Verdict::new(
        round_trip_failures == 0 && undetected == 0,
        format!("10000 chained words: {round_trip_failures} round-trip failures, {undetected} undetected flips"),
    )
}

fn criterion_3() -> Verdict {
    const RATE: f64 = 4.092e6;
    let n = 1_000_000usize;
    let duration = (n as f64 / RATE * 1e3).ceil() / 1e3 + 1e-3;
    let power = PowerAndNoiseConfig::new(-10.0, -20.0, RATE).unwrap();

    let nav = build_nav_message(3, 1).unwrap();
    let mut gnss = sample_l1ca(1, &nav, RATE, n as f64 / RATE, 0.0).unwrap();
    gnss.samples.truncate(n);

    let ofdm_cfg = OfdmConfig::default();
    let raw = generate_ofdm_downlink(&ofdm_cfg, duration, 4).unwrap();
    let mut rs = RationalResampler::new(ofdm_cfg.rate, RATE).unwrap();
    let scale = 1.0 / rs.power_gain(&ofdm_cfg.subcarrier_frequencies()).sqrt();
    let mut fiveg = Vec::new();
    rs.push(&raw.samples, &mut fiveg);
    fiveg.truncate(n);
    fiveg.iter_mut().for_each(|z| *z *= scale);
    let fiveg = SampleStream::new(fiveg, RATE, 0.0).unwrap();

    let mixed = combine(&gnss, &fiveg, power.rho).unwrap();
    // Component amplitudes by projection onto each (uncorrelated) source.
    let project = |s: &SampleStream| {
        let num: Complex64 = mixed.samples.iter().zip(&s.samples).map(|(y, x)| y * x.conj()).sum();
        let den: f64 = s.samples.iter().map(|x| x.norm_sqr()).sum();
        (num.re / den).powi(2) * den / n as f64
    };
    let (pg, pf) = (project(&gnss), project(&fiveg));
    let noisy = add_awgn(&mixed, &power, 5);
    let var = noisy.samples.iter().zip(&mixed.samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n as f64;

    let expected_var = power.rho / power.sinr_lin() - (1.0 - power.rho);
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    let pass = rel(pg, power.rho) < 0.01
        && rel(pf, 1.0 - power.rho) < 0.01
        && rel(var, expected_var) < 0.01
        && (expected_var - 8.182).abs() < 1e-3;
    Verdict::new(
        pass,
        format!(
            "P_gnss {pg:.5} (rho {:.5}), P_5g {pf:.5} ({:.5}), noise {var:.4} (sigma^2 {expected_var:.4})",
            power.rho,
            1.0 - power.rho
        ),
    )
}

fn criterion_4() -> Verdict {
    let cfg = TrialConfig::default();
    // 50 dB-Hz over 4.092 MHz is an SINR of -16.12 dB; use -16 dB.
    let power = PowerAndNoiseConfig::from_rho(1.0, -16.0, cfg.bandwidth_hz).unwrap();
    let cn0 = jcap_core::channel::effective_cn0(&power);
    let out = run_trial(&cfg, &power, &DopplerProfile::zero(), 4).unwrap();
    let r = out.result;
    let pass = cn0 >= 50.0
        && r.bit_errors == 0
        && r.bits_compared >= 500
        && r.subframe_rate() == Some(1.0)
        && out.mean_est_doppler_error.abs() <= 0.1;
    Verdict::new(
        pass,
        format!(
            "C/N0 {cn0:.2} dB-Hz, {} errors in {} bits, {}/{} subframes, fine-stage Doppler error {:+.4} Hz",
            r.bit_errors, r.bits_compared, r.subframes_decoded, r.subframes_attempted, out.mean_est_doppler_error
        ),
    )
}

fn criterion_5() -> Verdict {
    let q = estimate_quantiles(&OrbitConfig::default(), 100_000, 5).unwrap();
    let r = QuantileTable::REFERENCE;
    let within = |x: f64, want: f64, tol: f64| (x / want - 1.0).abs() <= tol;
    let pass = within(q.rate_q33, r.rate_q33, 0.15)
        && within(q.rate_q66, r.rate_q66, 0.15)
        && within(q.rate_q99, r.rate_q99, 0.15)
        && within(q.acc_q33, r.acc_q33, 0.25)
        && within(q.acc_q66, r.acc_q66, 0.25)
        && within(q.acc_q99, r.acc_q99, 0.25);
    Verdict::new(
        pass,
        format!(
            "|fdot| {:.2}/{:.2}/{:.2} Hz/s, |fddot| {:.3}/{:.3}/{:.3} Hz/s^2",
            q.rate_q33, q.rate_q66, q.rate_q99, q.acc_q33, q.acc_q66, q.acc_q99
        ),
    )
}

fn campaign_config() -> CampaignConfig {
    CampaignConfig { n_trials: 25, ..CampaignConfig::default() }
}

fn sweep_config() -> CampaignConfig {
    let mut cfg = CampaignConfig::default();
    cfg.sweep.rate_step = 2.0;
    cfg.sweep.n_trials = Some(25);
    cfg.sweep.fddot = Some(1.13);
    cfg.sweep.zero_control = false;
    cfg
}

fn combined_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn criterion_6(out: &CampaignOutput) -> Verdict {
    let mut cells: BTreeMap<(i64, i64), BTreeMap<DynamicClass, (f64, f64)>> = BTreeMap::new();
    for c in &out.aggregates {
        let key = ((c.sir_db * 100.0) as i64, (c.sinr_db * 100.0) as i64);
        cells.entry(key).or_default().insert(c.class, (c.stats.p_sub, c.stats.p_sub_se));
    }
    let mut violations = Vec::new();
    for (&(sir, sinr), by_class) in &cells {
        for pair in DynamicClass::ALL.windows(2) {
            let (Some(&(pa, sa)), Some(&(pb, sb))) = (by_class.get(&pair[0]), by_class.get(&pair[1])) else {
                continue;
            };
            if pa < pb - 2.0 * combined_se(sa, sb) {
                violations.push(format!(
                    "SIR {} SINR {}: {} {pa:.2} < {} {pb:.2}",
                    sir as f64 / 100.0,
                    sinr as f64 / 100.0,
                    pair[0],
                    pair[1]
                ));
            }
        }
    }
    let mut missing = Vec::new();
    for sir in [-10.0, -20.0] {
        for class in [DynamicClass::Low, DynamicClass::Medium] {
            let best = out
                .aggregates
                .iter()
                .filter(|c| c.sir_db == sir && c.class == class)
                .map(|c| c.stats.p_sub)
                .fold(f64::NAN, f64::max);
            if best.is_nan() || best < 0.9 {
                missing.push(format!("SIR {sir} {class} best P_sub {best:.2}"));
            }
        }
    }
    let pass = violations.is_empty() && missing.is_empty() && out.errors.is_empty();
    let mut detail = format!(
        "{} cells, {} ordering violations, {} reachability misses",
        cells.len(),
        violations.len(),
        missing.len()
    );
    for v in violations.iter().chain(&missing) {
        detail.push_str("; ");
        detail.push_str(v);
    }
    Verdict::new(pass, detail)
}

fn criterion_8(out: &CampaignOutput) -> Verdict {
    // (sinr, mean BER, standard error) per (SIR, class)
    type Series = Vec<(f64, f64, f64)>;
    let mut series: BTreeMap<(i64, DynamicClass), Series> = BTreeMap::new();
    for c in &out.aggregates {
        series
            .entry(((c.sir_db * 100.0) as i64, c.class))
            .or_default()
            .push((c.sinr_db, c.stats.mean_ber, c.stats.ber_se));
    }
    let mut violations = Vec::new();
    for (&(sir, class), s) in &mut series {
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in s.windows(2) {
            let ((lo_sinr, lo_ber, lo_se), (hi_sinr, hi_ber, hi_se)) = (w[0], w[1]);
            if hi_ber > lo_ber + 2.0 * combined_se(lo_se, hi_se) {
                violations.push(format!(
                    "SIR {} {class}: BER {hi_ber:.3e} at {hi_sinr} dB > {lo_ber:.3e} at {lo_sinr} dB",
                    sir as f64 / 100.0
                ));
            }
        }
    }
    let mut detail = format!("{} series, {} violations", series.len(), violations.len());
    for v in &violations {
        detail.push_str("; ");
        detail.push_str(v);
    }
    Verdict::new(violations.is_empty(), detail)
}

/// Lock limit of one SIR: the highest swept rate below which every point has
/// `P_sub ≥ 0.9`, and whether a point with `P_sub < 0.5` follows within 10 Hz/s.
fn lock_limit(points: &[(f64, f64)]) -> (Option<f64>, bool) {
    let mut limit = None;
    for &(rate, p) in points {
        if p >= 0.9 {
            limit = Some(rate);
        } else {
            break;
        }
    }
    let cliff = limit.is_some_and(|r| points.iter().any(|&(x, p)| x > r && x <= r + 10.0 + 1e-9 && p < 0.5));
    (limit, cliff)
}

fn criterion_7() -> Verdict {
    let cfg = sweep_config();
    let out = sweep_doppler_rate(&cfg, None).unwrap();
    let reference = [(-10.0, 227.0), (-20.0, 225.0), (-30.0, 219.0)];
    let mut limits = Vec::new();
    let mut detail = Vec::new();
    let mut pass = out.errors.is_empty();
    for (sir, want) in reference {
        let mut pts: Vec<(f64, f64)> = out
            .points
            .iter()
            .filter(|p| p.sir_db == sir)
            .map(|p| (p.rate.abs(), p.stats.p_sub))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (limit, cliff) = lock_limit(&pts);
        let in_band = limit.is_some_and(|r| (r - want).abs() <= 15.0);
        pass &= cliff && in_band;
        limits.push(limit.unwrap_or(f64::NAN));
        let curve: Vec<String> = pts.iter().map(|(r, p)| format!("{r}:{p:.2}")).collect();
        detail.push(format!(
            "SIR {sir}: limit {} Hz/s (ref {want}), cliff {}, [{}]",
            limit.map_or("none".into(), |r| r.to_string()),
            if cliff { "yes" } else { "no" },
            curve.join(" ")
        ));
    }
    let ordered = limits[0] >= limits[1] && limits[1] >= limits[2];
    pass &= ordered;
    Verdict::new(pass, format!("ordering {}; {}", if ordered { "ok" } else { "violated" }, detail.join("; ")))
}

fn csv_bytes(out: &CampaignOutput) -> (Vec<u8>, Vec<u8>) {
    let (mut t, mut a) = (Vec::new(), Vec::new());
    report::write_records(&mut t, &out.records).unwrap();
    report::write_aggregates(&mut a, out).unwrap();
    (t, a)
}

fn criterion_9() -> Verdict {
    let mut cfg = CampaignConfig {
        sir_db_list: vec![-10.0, -30.0],
        sinr_offsets_db: vec![2.0, 10.0],
        n_trials: 2,
        master_seed: 99,
        ..CampaignConfig::default()
    };
    cfg.trial.duration = 7.0;
    let first = csv_bytes(&run_campaign(&cfg, None).unwrap());
    cfg.workers = 1;
    let second = csv_bytes(&run_campaign(&cfg, None).unwrap());

    cfg.sir_db_list = vec![-20.0];
    cfg.sweep.rate_min = 230.0;
    cfg.sweep.rate_max = 240.0;
    cfg.sweep.rate_step = 5.0;
    cfg.sweep.n_trials = Some(2);
    let sweep = |cfg: &CampaignConfig| {
        let out = sweep_doppler_rate(cfg, None).unwrap();
        let mut b = Vec::new();
        report::write_sweep(&mut b, &out).unwrap();
        report::write_records(&mut b, &out.records).unwrap();
        b
    };
    let s1 = sweep(&cfg);
    cfg.workers = 0;
    let s2 = sweep(&cfg);

    let same = first == second && s1 == s2;
    Verdict::new(
        same,
        format!(
            "campaign CSVs {} bytes, sweep CSVs {} bytes, identical across reruns and worker counts: {same}",
            first.0.len() + first.1.len(),
            s1.len()
        ),
    )
}

fn main() {
    let skip: Vec<u32> = std::env::var("JCAP_ACCEPTANCE_SKIP")
        .unwrap_or_default()
        .split(',')
        .filter_map(|s| s.trim().parse().ok())
        .collect();
    let mut failed = 0;
    let mut report_line = |n: u32, name: &str, run: &mut dyn FnMut() -> Verdict| {
        if skip.contains(&n) {
            println!("criterion {n} SKIP {name}");
            return;
        }
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!v.pass);
        println!("criterion {n} {status} {name} ({:.1} s): {}", start.elapsed().as_secs_f64(), v.detail);
    };

    report_line(1, "gold codes", &mut criterion_1);
    report_line(2, "parity round trip", &mut criterion_2);
    report_line(3, "channel calibration", &mut criterion_3);
    report_line(4, "null tracking", &mut criterion_4);
    report_line(5, "doppler statistics", &mut criterion_5);

    let mut campaign: Option<CampaignOutput> = None;
    report_line(6, "dynamic-class ordering", &mut || {
        criterion_6(campaign.get_or_insert_with(|| run_campaign(&campaign_config(), None).unwrap()))
    });
    report_line(7, "lock-limit cliff", &mut criterion_7);
    report_line(8, "BER monotonicity", &mut || {
        criterion_8(campaign.get_or_insert_with(|| run_campaign(&campaign_config(), None).unwrap()))
    });
    report_line(9, "determinism", &mut criterion_9);

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
