use num_complex::Complex64;

use super::ca_code::{generate_ca_code, CaCode, CA_CHIP_RATE, CA_CODE_LENGTH};
use super::nav::{NavMessage, NAV_BIT_RATE};
use crate::channel::DopplerProfile;
use crate::error::{invalid, Result};
use crate::stream::SampleStream;

/// 20 code periods per NAV bit.
pub const CHIPS_PER_BIT: f64 = (CA_CODE_LENGTH * 20) as f64;

/// Maps time to received code phase (chips).
///
/// Without dynamics the code advances at exactly 1.023 Mcps. With dynamics the chip
/// clock is dilated by the same fractional Doppler as the carrier, so the code phase
/// is `phase0 + R·(t + φ(t)/fc)` with `φ` the carrier Doppler phase in cycles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeClock {
    pub phase0: f64,
    pub dynamics: Option<(DopplerProfile, f64)>,
}

impl CodeClock {
    pub fn fixed(phase0: f64) -> Self {
        Self { phase0, dynamics: None }
    }

    pub fn with_doppler(phase0: f64, profile: DopplerProfile, carrier_hz: f64) -> Self {
        Self { phase0, dynamics: Some((profile, carrier_hz)) }
    }

    #[inline]
    pub fn position(&self, t: f64) -> f64 {
        let stretch = match &self.dynamics {
            Some((p, fc)) => p.phase_cycles(t) / fc,
            None => 0.0,
        };
        self.phase0 + CA_CHIP_RATE * (t + stretch)
    }

    /// Code phase at sample `k` of a stream at `rate`. The nominal part is formed as
    /// `k·(R/rate)`, which is exact when the rate is a power-of-two multiple of the
    /// chip rate, so chip edges fall exactly on sample instants.
    #[inline]
    pub fn position_at_sample(&self, k: u64, rate: f64) -> f64 {
        let nominal = k as f64 * (CA_CHIP_RATE / rate);
        let stretch = match &self.dynamics {
            Some((p, fc)) => CA_CHIP_RATE * p.phase_cycles(k as f64 / rate) / fc,
            None => 0.0,
        };
        self.phase0 + nominal + stretch
    }
}

/// Sample-accurate L1 C/A baseband generator; stateless per sample index.
#[derive(Clone, Debug)]
pub struct L1caGenerator {
    code: CaCode,
    nav: NavMessage,
    rate: f64,
    clock: CodeClock,
}

impl L1caGenerator {
    pub fn new(prn: u8, nav: NavMessage, rate: f64, clock: CodeClock) -> Result<Self> {
        if !(rate >= 2.0 * CA_CHIP_RATE) {
            return invalid(format!("sample rate {rate} is below 2.046 MHz"));
        }
        Ok(Self { code: generate_ca_code(prn)?, nav, rate, clock })
    }

    pub fn code(&self) -> &CaCode {
        &self.code
    }

    pub fn nav(&self) -> &NavMessage {
        &self.nav
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Writes samples `start..start + out.len()`.
    ///
    /// The code phase is evaluated exactly every 1024 samples and linearly in between;
    /// the code-Doppler stretch is so smooth that the interpolation error stays far
    /// below 1e-9 chips.
    pub fn fill(&self, start: u64, out: &mut [Complex64]) {
        const BLOCK: usize = 1024;
        let chips = self.code.chips();
        let bits = self.nav.bits();
        let mut k = start;
        let mut rest = out;
        while !rest.is_empty() {
            // anchors sit on global multiples of BLOCK so chunking cannot change the output
            let anchor = k - k % BLOCK as u64;
            let len = (anchor + BLOCK as u64 - k).min(rest.len() as u64) as usize;
            let (block, tail) = rest.split_at_mut(len);
            rest = tail;
            let a0 = self.clock.position_at_sample(anchor, self.rate);
            let a1 = self.clock.position_at_sample(anchor + BLOCK as u64, self.rate);
            let step = (a1 - a0) / BLOCK as f64;
            let off = (k - anchor) as usize;
            let p0 = a0 + off as f64 * step;
            // integer chip counter walked forward alongside the real-valued phase
            let mut c = p0.floor() as i64;
            let mut ci = c.rem_euclid(CA_CODE_LENGTH as i64) as usize;
            let mut bit = c.div_euclid(CHIPS_PER_BIT as i64);
            let mut in_bit = c.rem_euclid(CHIPS_PER_BIT as i64);
            let mut value = chip_value(chips[ci], bits, bit);
            for (j, z) in block.iter_mut().enumerate() {
                let f = (a0 + (off + j) as f64 * step).floor() as i64;
                while c < f {
                    c += 1;
                    ci += 1;
                    if ci == CA_CODE_LENGTH {
                        ci = 0;
                    }
                    in_bit += 1;
                    if in_bit == CHIPS_PER_BIT as i64 {
                        in_bit = 0;
                        bit += 1;
                    }
                    value = chip_value(chips[ci], bits, bit);
                }
                *z = Complex64::new(value, 0.0);
            }
            k += len as u64;
        }
    }
}

#[inline]
fn chip_value(chip: i8, bits: &[u8], bit: i64) -> f64 {
    let b = if bit < 0 { 0 } else { bits.get(bit as usize).copied().unwrap_or(0) };
    if b == 0 {
        chip as f64
    } else {
        -(chip as f64)
    }
}

/// Samples `duration` seconds of the unit-power L1 C/A overlay with a fixed chip rate.
///
/// Chips are rectangular and picked by nearest-lower chip index; every NAV bit spans
/// 20 code periods starting from `code_phase0`.
pub fn sample_l1ca(
    prn: u8,
    nav: &NavMessage,
    rate: f64,
    duration: f64,
    code_phase0: f64,
) -> Result<SampleStream> {
    if duration > nav.len() as f64 / NAV_BIT_RATE + 1e-12 {
        return invalid(format!(
            "duration {duration} s exceeds the {} s NAV message",
            nav.duration()
        ));
    }
    let generator = L1caGenerator::new(prn, nav.clone(), rate, CodeClock::fixed(code_phase0))?;
    let n = (duration * rate).round() as usize;
    let mut samples = vec![Complex64::default(); n];
    generator.fill(0, &mut samples);
    SampleStream::new(samples, rate, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnss::build_nav_message;
    use crate::stream::measure_mean_power;

    #[test]
    fn one_millisecond_at_table_rate() {
        let nav = build_nav_message(1, 1).unwrap();
        let s = sample_l1ca(1, &nav, 4.092e6, 0.001, 0.0).unwrap();
        assert_eq!(s.len(), 4092);
    }

    #[test]
    fn matched_replica_correlation() {
        let nav = build_nav_message(1, 1).unwrap();
        let s = sample_l1ca(1, &nav, 4.092e6, 0.001, 0.0).unwrap();
        let code = generate_ca_code(1).unwrap();
        let corr: f64 = s
            .samples
            .iter()
            .enumerate()
            .map(|(k, z)| z.re * code.chip((k / 4) as i64) as f64)
            .sum();
        assert!((corr.abs() / 4092.0) >= 0.99);
    }

    #[test]
    fn unit_power_over_full_stream() {
        let nav = build_nav_message(2, 1).unwrap();
        let s = sample_l1ca(3, &nav, 4.092e6, 0.2, 0.0).unwrap();
        let p = measure_mean_power(&s).unwrap();
        assert!((0.999..=1.001).contains(&p));
    }

    #[test]
    fn too_long_duration_rejected() {
        let nav = build_nav_message(2, 1).unwrap();
        assert!(sample_l1ca(1, &nav, 4.092e6, 6.02, 0.0).is_err());
        assert!(sample_l1ca(1, &nav, 2.0e6, 0.001, 0.0).is_err());
    }

    #[test]
    fn bit_edges_land_on_code_period_boundaries() {
        let nav = build_nav_message(4, 1).unwrap();
        let s = sample_l1ca(1, &nav, 4.092e6, 0.04, 0.0).unwrap();
        let code = generate_ca_code(1).unwrap();
        // 20 ms = 81840 samples = 20 whole periods, one bit
        for (k, z) in s.samples.iter().enumerate() {
            let bit = nav.bits()[k / 81_840];
            let chip = code.chip((k / 4) as i64) as f64;
            let expect = if bit == 0 { chip } else { -chip };
            assert_eq!(z.re, expect);
        }
    }

    #[test]
    fn code_doppler_stretches_chip_clock() {
        let p = DopplerProfile::new(20_000.0, 0.0, 0.0).unwrap();
        let c = CodeClock::with_doppler(0.0, p, 2e9);
        // 1 s at +20 kHz on a 2 GHz carrier: 1.023e6 * 1e-5 extra chips
        assert!((c.position(1.0) - 1.023e6 * (1.0 + 1e-5)).abs() < 1e-6);
    }
}
