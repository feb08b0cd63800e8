use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::stream::SampleStream;

/// Carrier Doppler as a quadratic in time: `f(t) = f0 + fdot·t + fddot·t²/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DopplerProfile {
    /// Initial Doppler shift (Hz).
    pub f0: f64,
    /// Doppler rate (Hz/s).
    pub fdot: f64,
    /// Doppler acceleration (Hz/s²).
    pub fddot: f64,
}

impl DopplerProfile {
    pub fn new(f0: f64, fdot: f64, fddot: f64) -> Result<Self> {
        if !(f0.is_finite() && fdot.is_finite() && fddot.is_finite()) {
            return invalid("Doppler coefficients must be finite");
        }
        Ok(Self { f0, fdot, fddot })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Instantaneous Doppler (Hz).
    pub fn frequency_at(&self, t: f64) -> f64 {
        self.f0 + self.fdot * t + 0.5 * self.fddot * t * t
    }

    /// Accumulated carrier phase (cycles), the integral of [`frequency_at`](Self::frequency_at).
    #[inline]
    pub fn phase_cycles(&self, t: f64) -> f64 {
        t * (self.f0 + t * (self.fdot / 2.0 + t * self.fddot / 6.0))
    }
}

const ANCHOR: u64 = 1024;

/// Applies `exp(j2πφ(t))` to a sample sequence.
///
/// The phase is re-evaluated in closed form at every 1024-sample anchor (fixed global
/// sample indices) and propagated inside the block by an exact quadratic-phase
/// recurrence, so the result does not depend on how the input is chunked.
pub struct DopplerRotator {
    profile: DopplerProfile,
    rate: f64,
    t0: f64,
    // continuation state for the sample at `next`
    next: u64,
    z: Complex64,
    w: Complex64,
    v: Complex64,
}

impl DopplerRotator {
    pub fn new(profile: DopplerProfile, rate: f64, t0: f64) -> Self {
        Self {
            profile,
            rate,
            t0,
            next: u64::MAX,
            z: Complex64::default(),
            w: Complex64::default(),
            v: Complex64::default(),
        }
    }

    fn anchor(&mut self, a: u64) {
        let t = self.t0 + a as f64 / self.rate;
        let p = &self.profile;
        let phase = p.phase_cycles(t);
        let f = p.frequency_at(t);
        let r = p.fdot + p.fddot * t;
        let fs = self.rate;
        self.z = Complex64::from_polar(1.0, TAU * (phase - phase.floor()));
        self.w = Complex64::from_polar(1.0, TAU * (f / fs + r / (2.0 * fs * fs)));
        self.v = Complex64::from_polar(1.0, TAU * r / (fs * fs));
        self.next = a;
    }

    /// Rotates `buf`, whose first element is global sample `start`.
    pub fn apply(&mut self, start: u64, buf: &mut [Complex64]) {
        if start != self.next {
            let a = start - start % ANCHOR;
            self.anchor(a);
            while self.next < start {
                self.step();
            }
        }
        for x in buf.iter_mut() {
            if self.next.is_multiple_of(ANCHOR) {
                self.anchor(self.next);
            }
            *x *= self.z;
            self.step();
        }
    }

    #[inline]
    fn step(&mut self) {
        self.z *= self.w;
        self.w *= self.v;
        self.next += 1;
    }
}

/// Rotates every sample of `s` by the Doppler phase at its time stamp.
///
/// Only the carrier is rotated; chip-clock dilation is a property of the GNSS
/// generator (see `CodeClock`).
pub fn apply_doppler(s: &SampleStream, d: &DopplerProfile) -> SampleStream {
    let mut out = s.clone();
    DopplerRotator::new(*d, s.rate, s.t0).apply(0, &mut out.samples);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize, rate: f64) -> SampleStream {
        SampleStream::new(vec![Complex64::new(1.0, 0.0); n], rate, 0.0).unwrap()
    }

    fn wrap(x: f64) -> f64 {
        (x + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI
    }

    #[test]
    fn zero_profile_is_identity() {
        let s = ones(5000, 1e5);
        let out = apply_doppler(&s, &DopplerProfile::zero());
        for (a, b) in out.samples.iter().zip(&s.samples) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn one_cycle_in_ten_ms_at_100hz() {
        let d = DopplerProfile::new(100.0, 0.0, 0.0).unwrap();
        assert!((d.phase_cycles(0.01) - 1.0).abs() < 1e-12);
        let s = ones(1001, 1e5);
        let out = apply_doppler(&s, &d);
        assert!((out.samples[1000] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        assert!((out.samples[250] - Complex64::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn ramp_closed_form() {
        let d = DopplerProfile::new(0.0, -200.0, 0.0).unwrap();
        assert!((d.frequency_at(1.0) + 200.0).abs() < 1e-12);
        assert!((TAU * d.phase_cycles(1.0) + 200.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn chunking_does_not_change_output() {
        let d = DopplerProfile::new(31_234.5, -246.59, 1.13).unwrap();
        let s = ones(10_000, 4.092e6);
        let whole = apply_doppler(&s, &d);
        let mut pieces = s.samples.clone();
        let mut rot = DopplerRotator::new(d, 4.092e6, 0.0);
        let mut at = 0;
        for len in [1usize, 700, 2048, 13, 5000, 2238] {
            rot.apply(at as u64, &mut pieces[at..at + len]);
            at += len;
        }
        assert_eq!(pieces, whole.samples);
    }

    #[test]
    fn phase_accuracy_after_ten_seconds() {
        let d = DopplerProfile::new(-38_000.0, -246.59, 1.13).unwrap();
        let rate = 4.092e6;
        let start = (10.0 * rate) as u64 - 3000;
        let mut buf = vec![Complex64::new(1.0, 0.0); 3000];
        DopplerRotator::new(d, rate, 0.0).apply(start, &mut buf);
        let mut worst = 0f64;
        for (j, z) in buf.iter().enumerate() {
            let t = (start + j as u64) as f64 / rate;
            let p = d.phase_cycles(t);
            let exact = TAU * (p - p.floor());
            worst = worst.max(wrap(z.arg() - exact).abs());
            assert!((z.norm() - 1.0).abs() < 1e-10);
        }
        assert!(worst < 1e-6, "phase error {worst} rad");
    }
}
