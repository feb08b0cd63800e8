//! CP-OFDM interferer with NR numerology µ = 0 scaled to a 5 MHz (25 RB) carrier.
//!
//! Every occupied subcarrier carries a seeded unit-magnitude QPSK symbol in every
//! OFDM symbol (full load). Each 1 ms subframe is normalised to unit mean power.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::stream::SampleStream;

pub const SYMBOLS_PER_SUBFRAME: usize = 14;
pub const SUBFRAME_DURATION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct OfdmConfig {
    /// Subcarrier spacing (Hz).
    pub scs: f64,
    pub fft_size: usize,
    pub n_rb: usize,
    /// Sample rate (Hz).
    pub rate: f64,
    /// Cyclic prefix length of each of the 14 symbols in a subframe.
    pub cp_lengths: Vec<usize>,
}

impl Default for OfdmConfig {
    /// 15 kHz SCS, 512-point FFT, 25 RB at 7.68 MSps, normal CP (40/36).
    fn default() -> Self {
        let cp_lengths = (0..SYMBOLS_PER_SUBFRAME)
            .map(|l| if l % 7 == 0 { 40 } else { 36 })
            .collect();
        Self { scs: 15e3, fft_size: 512, n_rb: 25, rate: 7.68e6, cp_lengths }
    }
}

impl OfdmConfig {
    pub fn occupied_subcarriers(&self) -> usize {
        12 * self.n_rb
    }

    pub fn samples_per_subframe(&self) -> usize {
        self.cp_lengths.iter().map(|cp| cp + self.fft_size).sum()
    }

    /// Baseband frequencies of the occupied subcarriers (DC excluded).
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let half = (self.occupied_subcarriers() / 2) as i64;
        (-half..=half)
            .filter(|&k| k != 0)
            .map(|k| k as f64 * self.scs)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if (self.scs * self.fft_size as f64 - self.rate).abs() > 1e-6 * self.rate {
            return invalid("OFDM rate must equal scs × fft_size");
        }
        let occupied = self.occupied_subcarriers();
        if !occupied.is_multiple_of(2) || occupied >= self.fft_size {
            return invalid("occupied subcarriers must be even and fit in the FFT (DC unused)");
        }
        if self.cp_lengths.len() != SYMBOLS_PER_SUBFRAME {
            return invalid("need exactly 14 cyclic prefix lengths");
        }
        let expect = (self.rate * SUBFRAME_DURATION).round() as usize;
        if self.samples_per_subframe() != expect {
            return invalid(format!(
                "14 symbols span {} samples, a 1 ms subframe needs {expect}",
                self.samples_per_subframe()
            ));
        }
        Ok(())
    }

    fn bins(&self) -> Vec<usize> {
        let n = self.fft_size as i64;
        let half = (self.occupied_subcarriers() / 2) as i64;
        (-half..=half)
            .filter(|&k| k != 0)
            .map(|k| k.rem_euclid(n) as usize)
            .collect()
    }
}

/// Resource grid of one subframe: `symbols[l][i]` is subcarrier `i` (ascending
/// frequency) of OFDM symbol `l`, together with the time-domain scale applied.
#[derive(Clone, Debug)]
pub struct SubframeGrid {
    pub symbols: Vec<Vec<Complex64>>,
    pub scale: f64,
}

/// Produces the interferer one subframe at a time.
pub struct OfdmGenerator {
    cfg: OfdmConfig,
    bins: Vec<usize>,
    rng: ChaCha8Rng,
    ifft: Arc<dyn Fft<f64>>,
    freq: Vec<Complex64>,
    scratch: Vec<Complex64>,
    subframe: Vec<Complex64>,
}

impl OfdmGenerator {
    pub fn new(cfg: OfdmConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let ifft = FftPlanner::new().plan_fft_inverse(cfg.fft_size);
        let scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
        Ok(Self {
            bins: cfg.bins(),
            freq: vec![Complex64::default(); cfg.fft_size],
            subframe: Vec::with_capacity(cfg.samples_per_subframe()),
            rng: ChaCha8Rng::seed_from_u64(seed),
            ifft,
            scratch,
            cfg,
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// Appends the next subframe to `out`.
    pub fn next_subframe(&mut self, out: &mut Vec<Complex64>) {
        self.render(None);
        out.extend_from_slice(&self.subframe);
    }

    /// Like [`next_subframe`](Self::next_subframe) but also returns the QPSK grid.
    pub fn next_subframe_with_grid(&mut self, out: &mut Vec<Complex64>) -> SubframeGrid {
        let mut symbols = Vec::with_capacity(SYMBOLS_PER_SUBFRAME);
        let scale = self.render(Some(&mut symbols));
        out.extend_from_slice(&self.subframe);
        SubframeGrid { symbols, scale }
    }

    fn render(&mut self, mut grid: Option<&mut Vec<Vec<Complex64>>>) -> f64 {
        let n = self.cfg.fft_size;
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let pre = 1.0 / (self.bins.len() as f64).sqrt();
        self.subframe.clear();
        for l in 0..SYMBOLS_PER_SUBFRAME {
            self.freq.fill(Complex64::default());
            let mut word = 0u64;
            let mut left = 0;
            let mut row = grid.as_ref().map(|_| Vec::with_capacity(self.bins.len()));
            for &bin in &self.bins {
                if left == 0 {
                    word = self.rng.random();
                    left = 32;
                }
                let re = if word & 1 == 0 { a } else { -a };
                let im = if word & 2 == 0 { a } else { -a };
                word >>= 2;
                left -= 1;
                let sym = Complex64::new(re, im);
                self.freq[bin] = sym * pre;
                if let Some(r) = row.as_mut() {
                    r.push(sym);
                }
            }
            if let (Some(g), Some(r)) = (grid.as_mut(), row) {
                g.push(r);
            }
            self.ifft.process_with_scratch(&mut self.freq, &mut self.scratch);
            let cp = self.cfg.cp_lengths[l];
            self.subframe.extend_from_slice(&self.freq[n - cp..]);
            self.subframe.extend_from_slice(&self.freq);
        }
        let power = crate::stream::mean_power(&self.subframe);
        let norm = 1.0 / power.sqrt();
        for z in &mut self.subframe {
            *z *= norm;
        }
        pre * norm
    }
}

/// Generates `duration` seconds (a whole number of subframes) of the interferer.
pub fn generate_ofdm_downlink(cfg: &OfdmConfig, duration: f64, seed: u64) -> Result<SampleStream> {
    let n_sub = subframe_count(duration)?;
    let mut gen = OfdmGenerator::new(cfg.clone(), seed)?;
    let mut samples = Vec::with_capacity(n_sub * cfg.samples_per_subframe());
    for _ in 0..n_sub {
        gen.next_subframe(&mut samples);
    }
    SampleStream::new(samples, cfg.rate, 0.0)
}

pub(crate) fn subframe_count(duration: f64) -> Result<usize> {
    let n = duration / SUBFRAME_DURATION;
    if !(duration > 0.0) || (n - n.round()).abs() > 1e-6 {
        return invalid(format!("duration {duration} s is not a positive multiple of 1 ms"));
    }
    Ok(n.round() as usize)
}

pub use crate::stream::measure_mean_power;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_numerology_fills_one_millisecond() {
        let cfg = OfdmConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.samples_per_subframe(), 7680);
        assert_eq!(cfg.cp_lengths.iter().filter(|&&c| c == 40).count(), 2);
        assert_eq!(cfg.cp_lengths[0], 40);
        assert_eq!(cfg.cp_lengths[7], 40);
        assert_eq!(cfg.occupied_subcarriers(), 300);
    }

    #[test]
    fn ten_ms_is_one_frame_of_samples() {
        let s = generate_ofdm_downlink(&OfdmConfig::default(), 0.01, 1).unwrap();
        assert_eq!(s.len(), 76_800);
        let p = measure_mean_power(&s).unwrap();
        assert!((p - 1.0).abs() < 1e-3, "power {p}");
    }

    #[test]
    fn fractional_subframes_rejected() {
        assert!(generate_ofdm_downlink(&OfdmConfig::default(), 0.0015, 1).is_err());
        assert!(generate_ofdm_downlink(&OfdmConfig::default(), 0.0, 1).is_err());
    }

    #[test]
    fn invalid_numerology_rejected() {
        let cfg = OfdmConfig { fft_size: 256, ..OfdmConfig::default() };
        assert!(cfg.validate().is_err());
        let mut cfg = OfdmConfig::default();
        cfg.cp_lengths[3] = 40;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_ofdm_downlink(&OfdmConfig::default(), 0.002, 9).unwrap();
        let b = generate_ofdm_downlink(&OfdmConfig::default(), 0.002, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subcarrier_frequencies_skip_dc() {
        let f = OfdmConfig::default().subcarrier_frequencies();
        assert_eq!(f.len(), 300);
        assert!(!f.contains(&0.0));
        assert_eq!(f[0], -2.25e6);
        assert_eq!(f[299], 2.25e6);
    }
}
