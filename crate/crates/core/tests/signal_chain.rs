use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use jcap_core::channel::{sir_to_rho, DopplerRotator, RationalResampler};
use jcap_core::gnss::{
    build_nav_message, encode_word, generate_ca_code, parity_check_word, L1caGenerator, CodeClock, PREAMBLE,
    SUBFRAME_BITS, WORD_BITS,
};
use jcap_core::ofdm::{generate_ofdm_downlink, OfdmGenerator};
use jcap_core::{DopplerProfile, OfdmConfig, PowerAndNoiseConfig};

fn pack(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |a, &b| (a << 1) | b as u32)
}

#[test]
fn nav_message_words_chain_through_parity() {
    let nav = build_nav_message(11, 5).unwrap();
    assert_eq!(nav.len(), 5 * SUBFRAME_BITS);
    let (mut d29, mut d30) = (0u8, 0u8);
    for (i, w) in nav.bits().chunks(WORD_BITS).enumerate() {
        let word = pack(w);
        let data = parity_check_word(word, d29, d30).unwrap();
        assert_eq!(data, nav.data_word(i / 10, i % 10));
        (d29, d30) = (w[28], w[29]);
    }
    for &s in nav.subframe_starts() {
        assert_eq!(&nav.bits()[s..s + 8], &PREAMBLE);
    }
}

#[test]
fn nav_message_depends_only_on_seed() {
    assert_eq!(build_nav_message(5, 2).unwrap(), build_nav_message(5, 2).unwrap());
    assert_ne!(build_nav_message(5, 2).unwrap().bits(), build_nav_message(6, 2).unwrap().bits());
}

proptest! {
    #[test]
    fn parity_round_trip(data in 0u32..(1 << 24), d29 in 0u8..2, d30 in 0u8..2, flip in 0u32..30) {
        let word = encode_word(data, d29, d30);
        prop_assert!(word < 1 << 30);
        prop_assert_eq!(parity_check_word(word, d29, d30), Ok(data));
        prop_assert!(parity_check_word(word ^ (1 << flip), d29, d30).is_err());
    }

    #[test]
    fn split_power_sums_to_one(sir in -40.0f64..10.0, margin in 0.1f64..20.0) {
        let cfg = PowerAndNoiseConfig::new(sir, sir - margin, 4.092e6).unwrap();
        prop_assert!((cfg.rho - sir_to_rho(sir)).abs() < 1e-15);
        // SINR recomputed from the powers
        let sinr = cfg.rho / (1.0 - cfg.rho + cfg.noise_power);
        prop_assert!((10.0 * sinr.log10() - cfg.sinr_db).abs() < 1e-9);
    }

    #[test]
    fn sinr_above_sir_is_rejected(sir in -40.0f64..10.0, excess in 0.0f64..10.0) {
        prop_assert!(PowerAndNoiseConfig::new(sir, sir + excess, 4.092e6).is_err());
    }

    #[test]
    fn resampler_output_independent_of_chunking(cuts in prop::collection::vec(1usize..700, 1..8)) {
        let input: Vec<Complex64> = (0..3000)
            .map(|k| Complex64::from_polar(1.0, 0.37 * k as f64 + 1e-4 * (k * k) as f64))
            .collect();
        let mut whole = Vec::new();
        let mut r = RationalResampler::new(7.68e6, 4.092e6).unwrap();
        r.push(&input, &mut whole);

        let mut pieces = Vec::new();
        let mut r = RationalResampler::new(7.68e6, 4.092e6).unwrap();
        let mut at = 0;
        for c in cuts.iter().cycle() {
            if at >= input.len() {
                break;
            }
            let end = (at + c).min(input.len());
            r.push(&input[at..end], &mut pieces);
            at = end;
        }
        prop_assert_eq!(whole, pieces);
    }

    #[test]
    fn doppler_rotation_is_phase_continuous(
        f0 in -40e3f64..40e3, fdot in -300.0f64..300.0, split in 1usize..5000,
    ) {
        let profile = DopplerProfile::new(f0, fdot, 1.13).unwrap();
        let rate = 4.092e6;
        let mut one = vec![Complex64::new(1.0, 0.0); 5000];
        DopplerRotator::new(profile, rate, 0.0).apply(0, &mut one);
        let mut two = vec![Complex64::new(1.0, 0.0); 5000];
        let mut rot = DopplerRotator::new(profile, rate, 0.0);
        let (a, b) = two.split_at_mut(split);
        rot.apply(0, a);
        rot.apply(split as u64, b);
        for (k, (x, y)) in one.iter().zip(&two).enumerate() {
            prop_assert!((x - y).norm() < 1e-9);
            let want = Complex64::from_polar(1.0, TAU * profile.phase_cycles(k as f64 / rate));
            prop_assert!((x - want).norm() < 1e-6);
        }
    }
}

#[test]
fn ofdm_symbols_demodulate_to_their_grid() {
    let cfg = OfdmConfig::default();
    let n = cfg.fft_size;
    let mut gen = OfdmGenerator::new(cfg.clone(), 21).unwrap();
    let mut out = Vec::new();
    let grid = gen.next_subframe_with_grid(&mut out);
    let bins: Vec<usize> = cfg
        .subcarrier_frequencies()
        .iter()
        .map(|f| ((f / cfg.scs).round() as i64).rem_euclid(n as i64) as usize)
        .collect();

    let mut start = 0;
    let mut gain: Option<Complex64> = None;
    for (l, row) in grid.symbols.iter().enumerate() {
        start += cfg.cp_lengths[l];
        let sym = &out[start..start + n];
        // cyclic prefix repeats the tail of the symbol
        let cp = &out[start - cfg.cp_lengths[l]..start];
        for (a, b) in cp.iter().zip(&sym[n - cfg.cp_lengths[l]..]) {
            assert!((a - b).norm() < 1e-12);
        }
        let dft = |k: usize| -> Complex64 {
            sym.iter()
                .enumerate()
                .map(|(m, x)| x * Complex64::from_polar(1.0, -TAU * (k * m) as f64 / n as f64))
                .sum()
        };
        for (i, &bin) in bins.iter().enumerate().step_by(7) {
            let ratio = dft(bin) / row[i];
            let g = *gain.get_or_insert(ratio);
            assert!((ratio - g).norm() < 1e-9 * g.norm(), "symbol {l} bin {bin}");
        }
        // DC and guard band stay empty
        for k in [0, n / 2, 200, 312] {
            assert!(dft(k).norm() < 1e-9 * gain.unwrap().norm(), "bin {k} occupied");
        }
        start += n;
    }
    assert_eq!(start, out.len());
}

#[test]
fn ofdm_is_unit_power_and_decorrelated_across_seeds() {
    let cfg = OfdmConfig::default();
    let a = generate_ofdm_downlink(&cfg, 0.02, 1).unwrap();
    let b = generate_ofdm_downlink(&cfg, 0.02, 2).unwrap();
    let p = a.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / a.len() as f64;
    assert!((p - 1.0).abs() < 1e-9);
    let cross: Complex64 = a.samples.iter().zip(&b.samples).map(|(x, y)| x * y.conj()).sum();
    // |ρ| of two independent unit-power sequences is about 1/√N
    let rho = cross.norm() / a.len() as f64;
    assert!(rho < 5.0 / (a.len() as f64).sqrt(), "cross-correlation {rho}");
}

#[test]
fn ofdm_psd_is_confined_to_occupied_band() {
    let cfg = OfdmConfig::default();
    let s = generate_ofdm_downlink(&cfg, 0.01, 3).unwrap();
    // Band power by direct DFT over many symbol-length windows.
    let n = cfg.fft_size;
    let half_bw = cfg.occupied_subcarriers() as f64 / 2.0 * cfg.scs;
    let (mut inside, mut outside) = (0.0, 0.0);
    for w in s.samples.chunks_exact(n).take(40) {
        for k in (0..n).step_by(4) {
            let f = if k < n / 2 { k as f64 } else { k as f64 - n as f64 } * cfg.scs;
            let x: Complex64 = w
                .iter()
                .enumerate()
                .map(|(m, z)| z * Complex64::from_polar(1.0, -TAU * (k * m) as f64 / n as f64))
                .sum();
            if f.abs() <= half_bw + cfg.scs {
                inside += x.norm_sqr();
            } else if f.abs() > half_bw + 10.0 * cfg.scs {
                outside += x.norm_sqr();
            }
        }
    }
    // windows are not symbol-aligned, so sidelobe leakage is expected but small
    assert!(outside / inside < 0.02, "out-of-band ratio {}", outside / inside);
}

#[test]
fn overlay_correlates_with_its_code_only() {
    let nav = build_nav_message(1, 1).unwrap();
    let rate = 4.092e6;
    let g = L1caGenerator::new(7, nav, rate, CodeClock::fixed(0.0)).unwrap();
    let mut s = vec![Complex64::default(); 4092];
    g.fill(0, &mut s);
    let own = generate_ca_code(7).unwrap();
    let other = generate_ca_code(8).unwrap();
    // four samples per chip
    let corr = |c: &jcap_core::CaCode| {
        s.iter().enumerate().map(|(m, x)| x.re * c.chips()[m / 4] as f64).sum::<f64>()
    };
    assert!((corr(&own).abs() - 4092.0).abs() < 1e-9);
    assert!(corr(&other).abs() <= 4.0 * 65.0);
}
