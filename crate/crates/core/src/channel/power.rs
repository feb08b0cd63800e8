use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Fraction of transmit power given to the overlay for a GNSS-to-5G ratio in dB.
pub fn sir_to_rho(sir_db: f64) -> f64 {
    if sir_db == f64::INFINITY {
        return 1.0;
    }
    let s = db_to_lin(sir_db);
    s / (1.0 + s)
}

/// Power bookkeeping of one channel realisation under the unit-total-power
/// convention `P_GNSS + P_5G = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerAndNoiseConfig {
    pub sir_db: f64,
    pub rho: f64,
    pub sinr_db: f64,
    /// Receiver bandwidth `B` (Hz).
    pub bandwidth_hz: f64,
    /// Complex noise power `N0·B`.
    pub noise_power: f64,
}

impl PowerAndNoiseConfig {
    pub fn new(sir_db: f64, sinr_db: f64, bandwidth_hz: f64) -> Result<Self> {
        if sir_db.is_nan() || !sinr_db.is_finite() {
            return invalid("SIR and SINR must be numbers");
        }
        Self::build(sir_db, sir_to_rho(sir_db), sinr_db, bandwidth_hz)
    }

    /// Same, with the split given directly (ρ = 1 is a pure overlay).
    pub fn from_rho(rho: f64, sinr_db: f64, bandwidth_hz: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return invalid(format!("rho must lie in [0, 1], got {rho}"));
        }
        let sir_db = if rho == 1.0 { f64::INFINITY } else { lin_to_db(rho / (1.0 - rho)) };
        Self::build(sir_db, rho, sinr_db, bandwidth_hz)
    }

    fn build(sir_db: f64, rho: f64, sinr_db: f64, bandwidth_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0) {
            return invalid("receiver bandwidth must be positive");
        }
        let sinr = db_to_lin(sinr_db);
        let noise_power = rho / sinr - (1.0 - rho);
        if !(sinr_db < sir_db) || !(noise_power > 0.0 || rho == 0.0) {
            return Err(Error::UnreachableSinr { sir_db, sinr_db });
        }
        Ok(Self { sir_db, rho, sinr_db, bandwidth_hz, noise_power: noise_power.max(0.0) })
    }

    pub fn sinr_lin(&self) -> f64 {
        db_to_lin(self.sinr_db)
    }
}

/// Carrier-to-noise density (dB-Hz) obtained by treating interference plus noise as
/// a white floor over `B`.
pub fn effective_cn0(cfg: &PowerAndNoiseConfig) -> f64 {
    lin_to_db(cfg.sinr_lin() * cfg.bandwidth_hz)
}
