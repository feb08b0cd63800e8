//! Legacy GPS NAV message: 30-bit words with (32,26) Hamming parity, ten words per
//! 300-bit subframe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

pub const NAV_BIT_RATE: f64 = 50.0;
pub const WORD_BITS: usize = 30;
pub const WORDS_PER_SUBFRAME: usize = 10;
pub const SUBFRAME_BITS: usize = WORD_BITS * WORDS_PER_SUBFRAME;
/// TLM preamble, first bit first.
pub const PREAMBLE: [u8; 8] = [1, 0, 0, 0, 1, 0, 1, 1];

const DATA_MASK: u32 = 0x00ff_ffff;
const TOW_MODULUS: u32 = 100_800;

const fn data_mask(bits: &[u8]) -> u32 {
    let mut m = 0u32;
    let mut i = 0;
    while i < bits.len() {
        m |= 1 << (24 - bits[i] as u32);
        i += 1;
    }
    m
}

// (uses D30* instead of D29*, source data bits d1..d24)
const PARITY_EQUATIONS: [(bool, u32); 6] = [
    (false, data_mask(&[1, 2, 3, 5, 6, 10, 11, 12, 13, 14, 17, 18, 20, 23])),
    (true, data_mask(&[2, 3, 4, 6, 7, 11, 12, 13, 14, 15, 18, 19, 21, 24])),
    (false, data_mask(&[1, 3, 4, 5, 7, 8, 12, 13, 14, 15, 16, 19, 20, 22])),
    (true, data_mask(&[2, 4, 5, 6, 8, 9, 13, 14, 15, 16, 17, 20, 21, 23])),
    (true, data_mask(&[1, 3, 5, 6, 7, 9, 10, 14, 15, 16, 17, 18, 21, 22, 24])),
    (false, data_mask(&[3, 5, 6, 8, 9, 10, 11, 13, 15, 19, 22, 23, 24])),
];

/// Parity bits D25..D30 (D25 in bit 5) for 24 source data bits (d1 in bit 23).
pub fn parity_bits(data: u32, d29_prev: u8, d30_prev: u8) -> u8 {
    let mut p = 0u8;
    for (uses_d30, mask) in PARITY_EQUATIONS {
        let seed = if uses_d30 { d30_prev } else { d29_prev } & 1;
        let bit = seed ^ ((data & mask).count_ones() & 1) as u8;
        p = (p << 1) | bit;
    }
    p
}

/// Transmitted 30-bit word (D1 in bit 29): data complemented by D30*, then parity.
pub fn encode_word(data: u32, d29_prev: u8, d30_prev: u8) -> u32 {
    let data = data & DATA_MASK;
    let sent = if d30_prev & 1 == 1 { !data & DATA_MASK } else { data };
    (sent << 6) | parity_bits(data, d29_prev, d30_prev) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("word parity failure (expected {expected:06b}, received {received:06b})")]
pub struct ParityError {
    pub expected: u8,
    pub received: u8,
}

/// Checks a received 30-bit word; returns its 24 source data bits.
pub fn parity_check_word(word: u32, d29_prev: u8, d30_prev: u8) -> std::result::Result<u32, ParityError> {
    let received = (word & 0x3f) as u8;
    let sent = (word >> 6) & DATA_MASK;
    let data = if d30_prev & 1 == 1 { !sent & DATA_MASK } else { sent };
    let expected = parity_bits(data, d29_prev, d30_prev);
    if expected == received {
        Ok(data)
    } else {
        Err(ParityError { expected, received })
    }
}

/// A synthesized NAV bit stream with known content.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NavMessage {
    bits: Vec<u8>,
    subframe_starts: Vec<usize>,
    data_words: Vec<u32>,
}

impl NavMessage {
    /// Transmitted bits in time order, values in `{0, 1}`.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn subframe_starts(&self) -> &[usize] {
        &self.subframe_starts
    }

    pub fn n_subframes(&self) -> usize {
        self.subframe_starts.len()
    }

    /// Source data bits of word `word` (0-based) in subframe `subframe`.
    pub fn data_word(&self, subframe: usize, word: usize) -> u32 {
        self.data_words[subframe * WORDS_PER_SUBFRAME + word]
    }

    /// Message length in seconds at 50 bps.
    pub fn duration(&self) -> f64 {
        self.bits.len() as f64 / NAV_BIT_RATE
    }
}

/// Picks d23/d24 so that the encoded word ends in D29 = D30 = 0.
fn solve_trailing_bits(data: u32, d29_prev: u8, d30_prev: u8) -> u32 {
    let base = data & !0b11;
    (0..4u32)
        .map(|t| base | t)
        .find(|&d| parity_bits(d, d29_prev, d30_prev) & 0b11 == 0)
        .expect("d23/d24 always admit a solution")
}

/// Synthesizes `n_subframes` parity-valid subframes.
///
/// Word 1 is a TLM carrying the preamble, word 2 a HOW whose TOW count increments per
/// subframe, words 3..10 pseudorandom payload. HOW and word 10 use their last two
/// data bits to force D29 = D30 = 0, so every TLM is sent upright.
pub fn build_nav_message(data_seed: u64, n_subframes: usize) -> Result<NavMessage> {
    if n_subframes == 0 {
        return invalid("a NAV message needs at least one subframe");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let tow0 = rng.random_range(0..TOW_MODULUS);

    let mut bits = Vec::with_capacity(n_subframes * SUBFRAME_BITS);
    let mut data_words = Vec::with_capacity(n_subframes * WORDS_PER_SUBFRAME);
    let mut subframe_starts = Vec::with_capacity(n_subframes);
    let (mut d29, mut d30) = (0u8, 0u8);

    for sf in 0..n_subframes {
        subframe_starts.push(bits.len());
        for w in 0..WORDS_PER_SUBFRAME {
            let payload = rng.random::<u32>() & DATA_MASK;
            let data = match w {
                0 => {
                    let preamble = PREAMBLE.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                    // TLM message bits 9..22 random, integrity and reserved bits clear
                    (preamble << 16) | (payload & 0x00_fffc)
                }
                1 => {
                    let tow = (tow0 + sf as u32 + 1) % TOW_MODULUS;
                    let subframe_id = (sf % 5) as u32 + 1;
                    solve_trailing_bits((tow << 7) | (subframe_id << 2), d29, d30)
                }
                9 => solve_trailing_bits(payload, d29, d30),
                _ => payload,
            };
            let word = encode_word(data, d29, d30);
            for k in (0..WORD_BITS).rev() {
                bits.push(((word >> k) & 1) as u8);
            }
            d29 = ((word >> 1) & 1) as u8;
            d30 = (word & 1) as u8;
            data_words.push(data);
        }
    }
    Ok(NavMessage { bits, subframe_starts, data_words })
}
