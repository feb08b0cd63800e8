//! Hybrid downlink channel: power split, rate alignment, Doppler and noise.

mod awgn;
mod doppler;
mod power;
mod resample;

pub use awgn::{add_awgn, NoiseSource};
pub use doppler::{apply_doppler, DopplerProfile, DopplerRotator};
pub use power::{db_to_lin, effective_cn0, lin_to_db, sir_to_rho, PowerAndNoiseConfig};
pub use resample::{resample, RationalResampler};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::stream::SampleStream;

/// `√ρ·gnss + √(1−ρ)·fiveg`, sample by sample.
pub fn combine(gnss: &SampleStream, fiveg: &SampleStream, rho: f64) -> Result<SampleStream> {
    if gnss.rate != fiveg.rate {
        return invalid(format!("rate mismatch: {} vs {}", gnss.rate, fiveg.rate));
    }
    if gnss.len() != fiveg.len() {
        return invalid(format!("length mismatch: {} vs {}", gnss.len(), fiveg.len()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return invalid(format!("rho must lie in [0, 1], got {rho}"));
    }
    let mut out = vec![Complex64::default(); gnss.len()];
    combine_into(&gnss.samples, &fiveg.samples, rho, &mut out);
    SampleStream::new(out, gnss.rate, gnss.t0)
}

pub(crate) fn combine_into(gnss: &[Complex64], fiveg: &[Complex64], rho: f64, out: &mut [Complex64]) {
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    for ((o, g), f) in out.iter_mut().zip(gnss).zip(fiveg) {
        *o = g * a + f * b;
    }
}
