use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{sample_many, GeometrySample, OrbitConfig};
use crate::channel::DopplerProfile;
use crate::error::{invalid, Error, Result};

/// Empirical thresholds splitting Doppler dynamics into three classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuantileTable {
    pub rate_q33: f64,
    pub rate_q66: f64,
    pub rate_q99: f64,
    pub acc_q33: f64,
    pub acc_q66: f64,
    pub acc_q99: f64,
}

impl QuantileTable {
    /// Thresholds for a 1200 km polar orbit at 2 GHz (Hz/s and Hz/s²).
    pub const REFERENCE: Self = Self {
        rate_q33: 153.01,
        rate_q66: 214.90,
        rate_q99: 246.59,
        acc_q33: 0.47,
        acc_q66: 0.80,
        acc_q99: 1.13,
    };

    pub fn validate(&self) -> Result<()> {
        let inc = |a: f64, b: f64, c: f64| a >= 0.0 && a < b && b < c;
        if !inc(self.rate_q33, self.rate_q66, self.rate_q99)
            || !inc(self.acc_q33, self.acc_q66, self.acc_q99)
        {
            return invalid("quantile thresholds must be non-negative and strictly increasing");
        }
        Ok(())
    }
}

impl Default for QuantileTable {
    fn default() -> Self {
        Self::REFERENCE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicClass {
    Low,
    Medium,
    High,
}

impl DynamicClass {
    pub const ALL: [Self; 3] = [Self::Low, Self::Medium, Self::High];

    /// The class maximum: (|rate|, |acceleration|).
    pub fn thresholds(self, table: &QuantileTable) -> (f64, f64) {
        match self {
            Self::Low => (table.rate_q33, table.acc_q33),
            Self::Medium => (table.rate_q66, table.acc_q66),
            Self::High => (table.rate_q99, table.acc_q99),
        }
    }
}

impl std::str::FromStr for DynamicClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Self::Low),
            "medium" => Ok(Self::Medium),
            "high" => Ok(Self::High),
            _ => Err(Error::Config(format!("unknown dynamic class '{s}'"))),
        }
    }
}

impl std::fmt::Display for DynamicClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        })
    }
}

/// How a class turns into a concrete Doppler profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileDraw {
    /// `f0` is uniform on `[-f0_span, f0_span]` (Hz).
    pub f0_span: f64,
    /// Sign applied to the class rate; the default is a receding-trend −1.
    pub rate_sign: f64,
    pub acc_sign: f64,
}

impl Default for ProfileDraw {
    fn default() -> Self {
        Self { f0_span: 40e3, rate_sign: -1.0, acc_sign: 1.0 }
    }
}

impl ProfileDraw {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0_span >= 0.0) || !self.f0_span.is_finite() {
            return invalid("f0 span must be finite and non-negative");
        }
        if self.rate_sign.abs() != 1.0 || self.acc_sign.abs() != 1.0 {
            return invalid("rate and acceleration signs must be +1 or -1");
        }
        Ok(())
    }

    /// Initial Doppler for the given seed (Hz).
    pub fn draw_f0(&self, seed: u64) -> f64 {
        if self.f0_span > 0.0 {
            ChaCha8Rng::seed_from_u64(seed).random_range(-self.f0_span..=self.f0_span)
        } else {
            0.0
        }
    }
}

/// Profile at the class maximum with a random initial Doppler.
pub fn draw_profile(
    class: DynamicClass,
    table: &QuantileTable,
    draw: &ProfileDraw,
    seed: u64,
) -> Result<DopplerProfile> {
    draw.validate()?;
    let (rate, acc) = class.thresholds(table);
    DopplerProfile::new(draw.draw_f0(seed), draw.rate_sign * rate, draw.acc_sign * acc)
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_abs(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.map(f64::abs).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// q33/q66/q99 of |fdot| and |fddot|.
pub fn quantiles_of(samples: &[GeometrySample]) -> QuantileTable {
    let rate = sorted_abs(samples.iter().map(|g| g.fdot));
    let acc = sorted_abs(samples.iter().map(|g| g.fddot));
    QuantileTable {
        rate_q33: quantile(&rate, 0.33),
        rate_q66: quantile(&rate, 0.66),
        rate_q99: quantile(&rate, 0.99),
        acc_q33: quantile(&acc, 0.33),
        acc_q66: quantile(&acc, 0.66),
        acc_q99: quantile(&acc, 0.99),
    }
}

pub fn estimate_quantiles(cfg: &OrbitConfig, n: usize, seed: u64) -> Result<QuantileTable> {
    if n < 10_000 {
        return invalid(format!("at least 10000 geometry samples are needed, got {n}"));
    }
    Ok(quantiles_of(&sample_many(cfg, n, seed)?))
}

/// Fixed-width histogram over `[lo, hi]`; values outside are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return invalid("histogram needs at least one bin and hi > lo");
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for v in values {
            if (lo..=hi).contains(&v) {
                counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        Ok(Self { lo, width, counts })
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(|i| self.lo + (i as f64 + 0.5) * self.width)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_center,count")?;
        for (c, n) in self.centers().zip(&self.counts) {
            writeln!(w, "{c},{n}")?;
        }
        Ok(())
    }
}
