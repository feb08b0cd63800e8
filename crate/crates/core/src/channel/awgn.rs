use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use super::PowerAndNoiseConfig;
use crate::stream::SampleStream;

/// Circularly symmetric complex Gaussian noise of a fixed total power.
///
/// Backed by xoshiro256++, which is several times faster than a ChaCha stream and
/// more than good enough for Monte Carlo noise.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    rng: Xoshiro256PlusPlus,
    sigma: f64,
}

impl NoiseSource {
    /// `power` is the complex variance `E|n|²`, split evenly over I and Q.
    pub fn new(power: f64, seed: u64) -> Self {
        Self { rng: Xoshiro256PlusPlus::seed_from_u64(seed), sigma: (power.max(0.0) / 2.0).sqrt() }
    }

    pub fn add_to(&mut self, buf: &mut [Complex64]) {
        if self.sigma == 0.0 {
            return;
        }
        for z in buf {
            let re: f64 = self.rng.sample(StandardNormal);
            let im: f64 = self.rng.sample(StandardNormal);
            *z += Complex64::new(re * self.sigma, im * self.sigma);
        }
    }
}

/// Adds noise of power `cfg.noise_power` drawn from `seed`.
pub fn add_awgn(s: &SampleStream, cfg: &PowerAndNoiseConfig, seed: u64) -> SampleStream {
    let mut out = s.clone();
    NoiseSource::new(cfg.noise_power, seed).add_to(&mut out.samples);
    out
}
