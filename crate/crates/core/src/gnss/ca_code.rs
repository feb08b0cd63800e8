use crate::error::{invalid, Result};

pub const CA_CODE_LENGTH: usize = 1023;
/// Nominal chipping rate (chips/s).
pub const CA_CHIP_RATE: f64 = 1.023e6;

/// G2 phase-selector taps (1-based register stages) for PRN 1..=32.
const G2_SELECT: [(usize, usize); 32] = [
    (2, 6),
    (3, 7),
    (4, 8),
    (5, 9),
    (1, 9),
    (2, 10),
    (1, 8),
    (2, 9),
    (3, 10),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (1, 4),
    (2, 5),
    (3, 6),
    (4, 7),
    (5, 8),
    (6, 9),
    (1, 3),
    (4, 6),
    (5, 7),
    (6, 8),
    (7, 9),
    (8, 10),
    (1, 6),
    (2, 7),
    (3, 8),
    (4, 9),
];

/// One period of a C/A Gold code in bipolar form (binary 0 → +1, 1 → −1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaCode {
    prn: u8,
    chips: Vec<i8>,
}

impl CaCode {
    pub fn prn(&self) -> u8 {
        self.prn
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    /// Chip at an arbitrary (wrapped) index.
    #[inline]
    pub fn chip(&self, index: i64) -> i8 {
        self.chips[index.rem_euclid(CA_CODE_LENGTH as i64) as usize]
    }

    /// Chips in the `{0, 1}` convention of the interface documents.
    pub fn binary(&self) -> impl Iterator<Item = u8> + '_ {
        self.chips.iter().map(|&c| u8::from(c < 0))
    }

    /// Periodic correlation `Σ_k self[k]·other[k + lag]`.
    pub fn periodic_correlation(&self, other: &CaCode, lag: usize) -> i32 {
        let n = CA_CODE_LENGTH;
        (0..n)
            .map(|k| self.chips[k] as i32 * other.chips[(k + lag) % n] as i32)
            .sum()
    }
}

/// Generates the C/A code of `prn` from the G1/G2 shift registers.
pub fn generate_ca_code(prn: u8) -> Result<CaCode> {
    if !(1..=32).contains(&prn) {
        return invalid(format!("PRN must be in 1..=32, got {prn}"));
    }
    let (s1, s2) = G2_SELECT[prn as usize - 1];
    // index 0 is stage 1
    let mut g1 = [1u8; 10];
    let mut g2 = [1u8; 10];
    let mut chips = Vec::with_capacity(CA_CODE_LENGTH);
    for _ in 0..CA_CODE_LENGTH {
        let bit = g1[9] ^ g2[s1 - 1] ^ g2[s2 - 1];
        chips.push(if bit == 0 { 1 } else { -1 });

        let f1 = g1[2] ^ g1[9];
        let f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        g1.rotate_right(1);
        g2.rotate_right(1);
        g1[0] = f1;
        g2[0] = f2;
    }
    Ok(CaCode { prn, chips })
}
