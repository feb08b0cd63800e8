//! From prompt correlations to NAV bits, frame sync, parity and trial scoring.

use num_complex::Complex64;
use serde::Serialize;

use crate::gnss::{parity_check_word, NavMessage, PREAMBLE, SUBFRAME_BITS, WORDS_PER_SUBFRAME, WORD_BITS};

/// Hard decisions on the in-phase prompt, with soft values kept for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SlicedBits {
    pub bits: Vec<u8>,
    pub soft: Vec<f64>,
    /// Every prompt was exactly zero; the bits carry no information.
    pub degenerate: bool,
}

/// `I ≥ 0 → 0`, `I < 0 → 1`, before any polarity resolution.
pub fn bits_from_prompts(prompts: &[Complex64]) -> SlicedBits {
    let bits = prompts.iter().map(|p| u8::from(p.re < 0.0)).collect();
    let soft = prompts.iter().map(|p| p.re).collect();
    let degenerate = prompts.iter().all(|p| p.re == 0.0 && p.im == 0.0);
    SlicedBits { bits, soft, degenerate }
}

/// Start of a confirmed subframe and the polarity of the bit stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Alignment {
    pub offset: usize,
    pub inverted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no preamble confirmed by TLM and HOW parity")]
pub struct FrameSyncError;

fn word_at(bits: &[u8], start: usize, flip: u8) -> u32 {
    bits[start..start + WORD_BITS].iter().fold(0u32, |w, &b| (w << 1) | u32::from(b ^ flip))
}

// D29*/D30* preceding `start`; before the first received bit a subframe boundary
// (which always ends in 00) is assumed.
fn prev_bits(bits: &[u8], start: usize, flip: u8) -> (u8, u8) {
    if start >= 2 {
        (bits[start - 2] ^ flip, bits[start - 1] ^ flip)
    } else {
        (0, 0)
    }
}

fn words_pass(bits: &[u8], start: usize, n_words: usize, flip: u8) -> bool {
    let (mut d29, mut d30) = prev_bits(bits, start, flip);
    for w in 0..n_words {
        let word = word_at(bits, start + w * WORD_BITS, flip);
        if parity_check_word(word, d29, d30).is_err() {
            return false;
        }
        d29 = ((word >> 1) & 1) as u8;
        d30 = (word & 1) as u8;
    }
    true
}

fn preamble_at(bits: &[u8], start: usize, flip: u8) -> bool {
    bits[start..start + PREAMBLE.len()].iter().zip(PREAMBLE).all(|(&b, p)| b ^ flip == p)
}

/// Searches both polarities for a preamble whose TLM and HOW words pass parity and
/// returns the earliest such alignment (upright first at equal offsets).
pub fn resolve_polarity_and_frame(bits: &[u8]) -> Result<Alignment, FrameSyncError> {
    if bits.len() < 2 * WORD_BITS {
        return Err(FrameSyncError);
    }
    for offset in 0..=bits.len() - 2 * WORD_BITS {
        for inverted in [false, true] {
            let flip = u8::from(inverted);
            if preamble_at(bits, offset, flip) && words_pass(bits, offset, 2, flip) {
                return Ok(Alignment { offset, inverted });
            }
        }
    }
    Err(FrameSyncError)
}

/// Outcome of one Monte Carlo trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TrialResult {
    pub ber: f64,
    pub bits_compared: usize,
    pub bit_errors: usize,
    pub subframes_attempted: usize,
    pub subframes_decoded: usize,
    /// Frame sync succeeded.
    pub locked: bool,
}

impl TrialResult {
    /// Fraction of attempted subframes that decoded, if any were attempted.
    pub fn subframe_rate(&self) -> Option<f64> {
        (self.subframes_attempted > 0).then(|| self.subframes_decoded as f64 / self.subframes_attempted as f64)
    }
}

/// Scores received bits against the transmitted message.
///
/// `bits[i]` is the decision for transmitted bit `first_bit + i`. Only subframes lying
/// completely inside the received span are attempted. A subframe decodes when its
/// preamble sits where the frame sync predicts and all ten words pass parity. Without
/// frame sync, BER is the smaller of the two polarity hypotheses.
pub fn score_trial(
    bits: &[u8],
    first_bit: usize,
    alignment: Option<Alignment>,
    truth: &NavMessage,
) -> TrialResult {
    let reference = truth.bits().get(first_bit..).unwrap_or(&[]);
    let n = bits.len().min(reference.len());
    let mismatches = bits[..n].iter().zip(&reference[..n]).filter(|(a, b)| a != b).count();
    let bit_errors = match alignment {
        Some(a) if a.inverted => n - mismatches,
        Some(_) => mismatches,
        None => mismatches.min(n - mismatches),
    };

    let starts: Vec<usize> = truth
        .subframe_starts()
        .iter()
        .filter(|&&s| s >= first_bit && s + SUBFRAME_BITS <= first_bit + n)
        .map(|&s| s - first_bit)
        .collect();
    let decoded = match alignment {
        Some(a) => {
            let flip = u8::from(a.inverted);
            starts
                .iter()
                .filter(|&&i| {
                    i.abs_diff(a.offset) % SUBFRAME_BITS == 0
                        && preamble_at(bits, i, flip)
                        && words_pass(bits, i, WORDS_PER_SUBFRAME, flip)
                })
                .count()
        }
        None => 0,
    };

    TrialResult {
        ber: if n == 0 { 0.0 } else { bit_errors as f64 / n as f64 },
        bits_compared: n,
        bit_errors,
        subframes_attempted: starts.len(),
        subframes_decoded: decoded,
        locked: alignment.is_some(),
    }
}

/// Slices, synchronises and scores in one call.
pub fn decode_and_score(prompts: &[Complex64], first_bit: usize, truth: &NavMessage) -> TrialResult {
    let sliced = bits_from_prompts(prompts);
    let alignment = if sliced.degenerate { None } else { resolve_polarity_and_frame(&sliced.bits).ok() };
    score_trial(&sliced.bits, first_bit, alignment, truth)
}
