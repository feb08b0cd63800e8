use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::stream::SampleStream;

// taps per polyphase branch, a multiple of the 8 accumulator lanes in `drain`
const TAPS: usize = 16;
const DEFAULT_BETA: f64 = 4.5;

/// Streaming polyphase resampler by a rational factor `up/down`.
///
/// The prototype is a Kaiser-windowed sinc centred on the output instant, so the
/// output has no group delay: output `n` estimates the input at time `n·down/up`
/// (in input samples). Every polyphase branch has unit DC gain. Input before the
/// first sample and after [`flush`](Self::flush) is taken as zero.
#[derive(Clone, Debug)]
pub struct RationalResampler {
    up: u64,
    down: u64,
    in_rate: f64,
    // taps and input history are held in single precision, which is far below the
    // interference accuracy that matters here and doubles the SIMD width
    bank: Vec<f32>,
    re: Vec<f32>,
    im: Vec<f32>,
    // global input index of buf[0]
    buf_start: i64,
    consumed: u64,
    produced: u64,
    phase: u64,
    base: i64,
}

impl RationalResampler {
    /// Resampler from `in_rate` to `out_rate`; both must be whole numbers of Hz.
    pub fn new(in_rate: f64, out_rate: f64) -> Result<Self> {
        if !(in_rate > 0.0 && out_rate > 0.0) {
            return invalid("sample rates must be positive");
        }
        let (a, b) = (in_rate.round() as u64, out_rate.round() as u64);
        if (a as f64 - in_rate).abs() > 1e-6 || (b as f64 - out_rate).abs() > 1e-6 {
            return invalid("rational resampling needs integer sample rates");
        }
        let g = gcd(a, b);
        let (up, down) = (b / g, a / g);
        if up > 1 << 16 {
            return invalid(format!("resampling ratio {up}/{down} needs too many phases"));
        }
        // pass band up to the narrower Nyquist edge, transition placed above it
        let beta = DEFAULT_BETA;
        let atten = beta / 0.1102 + 8.7;
        let transition = (atten - 7.95) / (2.285 * TAU * (TAPS - 1) as f64);
        let edge = 0.5 * (b as f64 / a as f64).min(1.0);
        let cutoff = if up < down { edge + transition / 2.0 } else { edge - transition / 2.0 };
        Ok(Self::with_design(up, down, beta, cutoff, in_rate))
    }

    fn with_design(up: u64, down: u64, beta: f64, cutoff: f64, in_rate: f64) -> Self {
        let half = (TAPS / 2) as f64;
        let i0b = bessel_i0(beta);
        let mut bank = Vec::with_capacity(up as usize * TAPS);
        for p in 0..up {
            let frac = p as f64 / up as f64;
            let row: Vec<f64> = (0..TAPS)
                .map(|j| {
                    let d = frac + half - 1.0 - j as f64;
                    let u = d / half;
                    let w = if u.abs() <= 1.0 { bessel_i0(beta * (1.0 - u * u).sqrt()) / i0b } else { 0.0 };
                    w * sinc(2.0 * cutoff * d)
                })
                .collect();
            let sum: f64 = row.iter().sum();
            bank.extend(row.iter().map(|h| (h / sum) as f32));
        }
        let lead = TAPS / 2 - 1;
        Self {
            up,
            down,
            in_rate,
            bank,
            re: vec![0.0; lead],
            im: vec![0.0; lead],
            buf_start: -(lead as i64),
            consumed: 0,
            produced: 0,
            phase: 0,
            base: 0,
        }
    }

    pub fn ratio(&self) -> (u64, u64) {
        (self.up, self.down)
    }

    pub fn out_rate(&self) -> f64 {
        self.in_rate * self.up as f64 / self.down as f64
    }

    /// Output samples owed for everything pushed so far: `ceil(consumed·up/down)`.
    pub fn total_output(&self) -> u64 {
        (self.consumed * self.up).div_ceil(self.down)
    }

    /// Feeds input and appends every output whose support is complete.
    pub fn push(&mut self, input: &[Complex64], out: &mut Vec<Complex64>) {
        self.re.extend(input.iter().map(|z| z.re as f32));
        self.im.extend(input.iter().map(|z| z.im as f32));
        self.consumed += input.len() as u64;
        self.drain(out, self.total_output());
    }

    /// Completes the stream with zeros and emits the remaining outputs.
    pub fn flush(&mut self, out: &mut Vec<Complex64>) {
        let total = self.total_output();
        self.re.extend(std::iter::repeat_n(0.0, TAPS));
        self.im.extend(std::iter::repeat_n(0.0, TAPS));
        self.drain(out, total);
    }

    fn drain(&mut self, out: &mut Vec<Complex64>, limit: u64) {
        const LANES: usize = 8;
        let half = (TAPS / 2) as i64;
        let end = self.buf_start + self.re.len() as i64;
        let (up, down) = (self.up, self.down);
        let (mut phase, mut base, mut produced) = (self.phase, self.base, self.produced);
        let (step, carry) = (down / up, down % up);
        let (re, im, bank) = (&self.re[..], &self.im[..], &self.bank[..]);
        while produced < limit && base + half < end {
            let first = (base - half + 1 - self.buf_start) as usize;
            let p = phase as usize * TAPS;
            let row: &[f32; TAPS] = bank[p..p + TAPS].try_into().unwrap();
            let xr: &[f32; TAPS] = re[first..first + TAPS].try_into().unwrap();
            let xi: &[f32; TAPS] = im[first..first + TAPS].try_into().unwrap();
            let (mut ar, mut ai) = ([0f32; LANES], [0f32; LANES]);
            for c in 0..TAPS / LANES {
                for l in 0..LANES {
                    ar[l] += row[c * LANES + l] * xr[c * LANES + l];
                    ai[l] += row[c * LANES + l] * xi[c * LANES + l];
                }
            }
            out.push(Complex64::new(ar.iter().sum::<f32>() as f64, ai.iter().sum::<f32>() as f64));
            produced += 1;
            // branch-free phase advance; the wrap pattern is irregular
            base += step as i64;
            phase += carry;
            let wrap = u64::from(phase >= up);
            phase -= wrap * up;
            base += wrap as i64;
        }
        (self.phase, self.base, self.produced) = (phase, base, produced);
        let keep_from = base - half + 1 - self.buf_start;
        if keep_from > 0 {
            let k = (keep_from as usize).min(self.re.len());
            self.re.drain(..k);
            self.im.drain(..k);
            self.buf_start += k as i64;
        }
    }

    /// Expected output/input power ratio for a signal whose power is spread evenly
    /// over the given tones (Hz), averaged over all polyphase branches.
    pub fn power_gain(&self, tones_hz: &[f64]) -> f64 {
        if tones_hz.is_empty() {
            return 1.0;
        }
        let mut total = 0.0;
        for &f in tones_hz {
            let w = TAU * f / self.in_rate;
            let step = Complex64::from_polar(1.0, w);
            let mut acc = 0.0;
            for row in self.bank.chunks_exact(TAPS) {
                let mut z = Complex64::new(1.0, 0.0);
                let mut h = Complex64::default();
                for &c in row {
                    h += z * c as f64;
                    z *= step;
                }
                acc += h.norm_sqr();
            }
            total += acc / self.up as f64;
        }
        total / tones_hz.len() as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Band-limited conversion of a whole stream to `target_rate`.
///
/// Output length is `ceil(len·target/rate)`, so durations agree within one output
/// sample. Equal rates return the input unchanged.
pub fn resample(s: &SampleStream, target_rate: f64) -> Result<SampleStream> {
    if !(target_rate > 0.0) {
        return invalid(format!("target rate must be positive, got {target_rate}"));
    }
    if target_rate == s.rate {
        return Ok(s.clone());
    }
    let mut r = RationalResampler::new(s.rate, target_rate)?;
    let mut out = Vec::with_capacity((s.len() as f64 * target_rate / s.rate) as usize + 1);
    r.push(&s.samples, &mut out);
    r.flush(&mut out);
    SampleStream::new(out, target_rate, s.t0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIN: f64 = 7.68e6;
    const FOUT: f64 = 4.092e6;

    fn tone(f: f64, n: usize) -> SampleStream {
        let v = (0..n).map(|k| Complex64::from_polar(1.0, TAU * f * k as f64 / FIN)).collect();
        SampleStream::new(v, FIN, 0.0).unwrap()
    }

    #[test]
    fn ratio_and_length() {
        let r = RationalResampler::new(FIN, FOUT).unwrap();
        assert_eq!(r.ratio(), (341, 640));
        let out = resample(&tone(0.0, 76_800), FOUT).unwrap();
        assert_eq!(out.len(), 40_920);
    }

    #[test]
    fn identity_rate() {
        let s = tone(1e5, 1000);
        assert_eq!(resample(&s, FIN).unwrap(), s);
    }

    #[test]
    fn tone_keeps_frequency_and_amplitude() {
        let out = resample(&tone(1e5, 76_800), FOUT).unwrap();
        let mid = &out.samples[100..out.len() - 100];
        for (k, z) in mid.iter().enumerate() {
            let t = (k + 100) as f64 / FOUT;
            let want = Complex64::from_polar(1.0, TAU * 1e5 * t);
            assert!((z - want).norm() < 0.03, "sample {k}: {z} vs {want}");
        }
    }

    #[test]
    fn in_band_ripple_below_half_db() {
        for f in [-2.0e6, -1.5e6, -7.5e5, 0.0, 3.3e5, 1.2e6, 1.9e6, 2.04e6] {
            let out = resample(&tone(f, 19_200), FOUT).unwrap();
            let mid = &out.samples[200..out.len() - 200];
            let p = crate::stream::mean_power(mid);
            let db = 10.0 * p.log10();
            assert!(db.abs() < 0.5, "{f} Hz: {db} dB");
        }
    }

    #[test]
    fn chunked_push_matches_single_push() {
        let s = tone(3.7e5, 20_000);
        let whole = resample(&s, FOUT).unwrap();
        let mut r = RationalResampler::new(FIN, FOUT).unwrap();
        let mut out = Vec::new();
        for chunk in s.samples.chunks(777) {
            r.push(chunk, &mut out);
        }
        r.flush(&mut out);
        assert_eq!(out, whole.samples);
    }

    #[test]
    fn power_gain_near_unity_in_band() {
        let r = RationalResampler::new(FIN, FOUT).unwrap();
        let g = r.power_gain(&[0.0, 5e5, 1e6]);
        assert!((g - 1.0).abs() < 0.02, "{g}");
    }
}
