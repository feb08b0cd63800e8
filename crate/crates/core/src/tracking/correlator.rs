use std::f64::consts::TAU;

use num_complex::Complex64;

use super::filter::LoopState;
use crate::gnss::{CaCode, CA_CODE_LENGTH, CHIPS_PER_BIT};

const GUARD: usize = 2;

/// C/A chips unrolled over one NAV bit (20 periods) with guard chips on both ends,
/// so replica lookups inside an epoch need no modulo.
#[derive(Clone, Debug)]
pub struct ReplicaCode {
    ext: Vec<f64>,
}

impl ReplicaCode {
    pub fn new(code: &CaCode) -> Self {
        let n = CHIPS_PER_BIT as usize + 2 * GUARD + 1;
        let ext = (0..n)
            .map(|i| code.chip(i as i64 - GUARD as i64) as f64)
            .collect::<Vec<_>>();
        debug_assert_eq!(ext[GUARD + CA_CODE_LENGTH], ext[GUARD]);
        Self { ext }
    }
}

/// Sample layout of the epoch that begins at the current NCO state.
///
/// An epoch spans the samples whose replica code phase lies in one NAV bit
/// `[k·20460, (k+1)·20460)` chips, so it is aligned to the bit edges of the replica.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochPlan {
    /// NAV bit index `k`.
    pub bit_index: u64,
    /// Samples in the epoch.
    pub samples: usize,
    /// Samples in the first half (replica phase below the mid-bit point).
    pub first_half: usize,
}

impl EpochPlan {
    pub fn at(state: &LoopState, rate: f64) -> Self {
        let cps = state.code_freq / rate;
        // a phase a hair short of a boundary belongs to the next bit
        let k = ((state.code_phase + 1e-6) / CHIPS_PER_BIT).floor().max(0.0);
        let q0 = state.code_phase - k * CHIPS_PER_BIT;
        let samples = ((CHIPS_PER_BIT - q0) / cps).ceil().max(1.0) as usize;
        let first_half = ((CHIPS_PER_BIT / 2.0 - q0) / cps).ceil().clamp(0.0, samples as f64) as usize;
        Self { bit_index: k as u64, samples, first_half }
    }
}

/// Early, prompt and late correlations of one epoch plus the two half-epoch prompts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Correlations {
    pub early: Complex64,
    pub prompt: Complex64,
    pub late: Complex64,
    pub prompt_first_half: Complex64,
    pub prompt_second_half: Complex64,
}

/// Correlates `samples` (which must hold exactly `plan.samples` values starting at the
/// NCO state) against the carrier and code replicas, and returns the correlations and
/// the state with both NCO phases advanced to the first sample after the epoch.
///
/// Early and late replicas sit `spacing/2` chips ahead of and behind the prompt.
pub fn correlate_epoch(
    samples: &[Complex64],
    rate: f64,
    state: &LoopState,
    replica: &ReplicaCode,
    spacing: f64,
    plan: &EpochPlan,
) -> (Correlations, LoopState) {
    assert_eq!(samples.len(), plan.samples, "sample block does not match the epoch plan");
    let cps = state.code_freq / rate;
    let q0 = state.code_phase - plan.bit_index as f64 * CHIPS_PER_BIT + GUARD as f64;
    let half = spacing / 2.0;
    let frac = state.carrier_phase - state.carrier_phase.floor();
    let step = Complex64::from_polar(1.0, -TAU * state.carrier_freq / rate);
    let mut nco = Complex64::from_polar(1.0, -TAU * frac);
    let ext = &replica.ext;

    let run = |range: std::ops::Range<usize>, nco: &mut Complex64| {
        let (mut e, mut p, mut l) = (Complex64::default(), Complex64::default(), Complex64::default());
        for j in range {
            let y = samples[j] * *nco;
            *nco *= step;
            let q = q0 + j as f64 * cps;
            e += y * ext[(q + half) as usize];
            p += y * ext[q as usize];
            l += y * ext[(q - half) as usize];
        }
        (e, p, l)
    };
    let (e1, p1, l1) = run(0..plan.first_half, &mut nco);
    let (e2, p2, l2) = run(plan.first_half..plan.samples, &mut nco);

    let n = plan.samples as f64;
    let mut next = *state;
    let phase = frac + n * state.carrier_freq / rate;
    next.carrier_phase = phase - phase.floor();
    next.code_phase = state.code_phase + n * cps;
    let c = Correlations {
        early: e1 + e2,
        prompt: p1 + p2,
        late: l1 + l2,
        prompt_first_half: p1,
        prompt_second_half: p2,
    };
    (c, next)
}
