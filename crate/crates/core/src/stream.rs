use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A block of complex baseband samples at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStream {
    pub samples: Vec<Complex64>,
    /// Samples per second.
    pub rate: f64,
    /// Time of the first sample (s).
    pub t0: f64,
}

impl SampleStream {
    pub fn new(samples: Vec<Complex64>, rate: f64, t0: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return invalid(format!("sample rate must be positive, got {rate}"));
        }
        Ok(Self { samples, rate, t0 })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    /// Time stamp of sample `k`.
    pub fn time_of(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.rate
    }

    /// Sequential reader over this stream.
    pub fn reader(&self) -> StreamReader<'_> {
        StreamReader { stream: self, pos: 0 }
    }
}

/// Mean of |x|² over the stream.
pub fn measure_mean_power(s: &SampleStream) -> Result<f64> {
    if s.is_empty() {
        return invalid("cannot measure the power of an empty stream");
    }
    Ok(mean_power(&s.samples))
}

pub(crate) fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Pull interface for consumers that process a signal block by block.
///
/// `read` fills as much of `buf` as the source can and returns the count; a short
/// read means the source is exhausted.
pub trait SampleSource {
    fn rate(&self) -> f64;
    fn read(&mut self, buf: &mut [Complex64]) -> usize;
}

pub struct StreamReader<'a> {
    stream: &'a SampleStream,
    pos: usize,
}

impl SampleSource for StreamReader<'_> {
    fn rate(&self) -> f64 {
        self.stream.rate
    }

    fn read(&mut self, buf: &mut [Complex64]) -> usize {
        let rest = &self.stream.samples[self.pos..];
        let n = rest.len().min(buf.len());
        buf[..n].copy_from_slice(&rest[..n]);
        self.pos += n;
        n
    }
}
