//! GPS L1 C/A overlay: Gold codes, NAV message synthesis and sampling.

mod ca_code;
mod l1ca;
mod nav;

pub use ca_code::{generate_ca_code, CaCode, CA_CHIP_RATE, CA_CODE_LENGTH};
pub use l1ca::{sample_l1ca, CodeClock, L1caGenerator, CHIPS_PER_BIT};
pub use nav::{
    build_nav_message, encode_word, parity_bits, parity_check_word, NavMessage, ParityError,
    NAV_BIT_RATE, PREAMBLE, SUBFRAME_BITS, WORDS_PER_SUBFRAME, WORD_BITS,
};
