//! Splittable seed derivation.
//!
//! A child seed is `splitmix64(parent ⊕ splitmix64(fnv1a(label)))`. Labels name the
//! component and its coordinates (`"trial/17"`, `"noise"`), so every consumer of
//! randomness gets its own stream and adding a consumer never shifts another's.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn derive_seed(parent: u64, label: &str) -> u64 {
    splitmix64(parent ^ splitmix64(fnv1a(label)))
}

/// Seeds of the random components of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub nav: u64,
    pub ofdm: u64,
    pub noise: u64,
    pub doppler: u64,
}

impl TrialSeeds {
    pub fn from_trial(seed: u64) -> Self {
        Self {
            nav: derive_seed(seed, "nav"),
            ofdm: derive_seed(seed, "ofdm"),
            noise: derive_seed(seed, "noise"),
            doppler: derive_seed(seed, "doppler"),
        }
    }

    pub fn all(&self) -> [u64; 4] {
        [self.nav, self.ofdm, self.noise, self.doppler]
    }
}
