//! Circular-orbit propagation and the Doppler dynamics seen by ground receivers.
//!
//! The satellite moves on a circular Keplerian orbit; positions are reported in an
//! Earth-fixed frame so that Earth rotation enters the line-of-sight dynamics.

mod geometry;
mod stats;

pub use geometry::{
    range_derivatives, range_derivatives_fd, sample_geometry, sample_many, GeometrySample,
};
pub use stats::{
    draw_profile, estimate_quantiles, quantile, quantiles_of, DynamicClass, Histogram,
    ProfileDraw, QuantileTable,
};

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Standard gravitational parameter of the Earth (m³/s²).
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Equatorial radius of the spherical Earth model (m).
pub const EARTH_RADIUS: f64 = 6_378_137.0;
/// Sidereal rotation rate (rad/s).
pub const EARTH_ROTATION: f64 = 7.292_115_0e-5;

pub type Vec3 = [f64; 3];

/// How receiver positions are drawn around the satellite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverSampling {
    /// Elevation uniform over the mask, azimuth uniform.
    #[default]
    UniformElevation,
    /// Receiver uniform over the Earth's surface, rejected outside the mask.
    AreaUniform,
}

impl std::str::FromStr for ReceiverSampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-elevation" => Ok(Self::UniformElevation),
            "area-uniform" => Ok(Self::AreaUniform),
            _ => Err(Error::Config(format!("unknown receiver sampling '{s}'"))),
        }
    }
}

impl std::fmt::Display for ReceiverSampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::UniformElevation => "uniform-elevation",
            Self::AreaUniform => "area-uniform",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitConfig {
    /// Height above the spherical Earth (m).
    pub altitude: f64,
    pub inclination_deg: f64,
    /// Carrier frequency the Doppler is expressed at (Hz).
    pub fc: f64,
    /// Spacing of the candidate epochs (s).
    pub epoch_step: f64,
    /// Propagated span in orbital periods.
    pub span_periods: f64,
    pub elevation_mask_deg: f64,
    pub sampling: ReceiverSampling,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            altitude: 1.2e6,
            inclination_deg: 90.0,
            fc: 2e9,
            epoch_step: 15.0,
            span_periods: 6.0,
            elevation_mask_deg: 30.0,
            sampling: ReceiverSampling::UniformElevation,
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude > 0.0) {
            return invalid("altitude must be positive");
        }
        if !(self.fc > 0.0) {
            return invalid("carrier frequency must be positive");
        }
        if !(self.epoch_step > 0.0) || !(self.span_periods > 0.0) {
            return invalid("epoch step and span must be positive");
        }
        if !(0.0..90.0).contains(&self.elevation_mask_deg) {
            return invalid("elevation mask must lie in [0, 90) degrees");
        }
        if !self.inclination_deg.is_finite() {
            return invalid("inclination must be finite");
        }
        if self.epoch_count() == 0 {
            return invalid("span shorter than one epoch step");
        }
        Ok(())
    }

    /// Orbit radius (m).
    pub fn radius(&self) -> f64 {
        EARTH_RADIUS + self.altitude
    }

    /// Mean motion (rad/s).
    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.radius().powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.mean_motion()
    }

    /// Number of candidate epochs on the sampling grid.
    pub fn epoch_count(&self) -> u64 {
        (self.span_periods * self.period() / self.epoch_step).floor() as u64
    }
}

/// Earth-fixed position and its first three time derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SatState {
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Vec3,
    pub jerk: Vec3,
}

/// Satellite state at time `t` (s after the ascending-node crossing at 0° longitude).
///
/// In the Earth-fixed frame the equatorial components are two counter-rotating
/// phasors, `x + jy = a(1+cos i)/2·e^{j(n−ωE)t} + a(1−cos i)/2·e^{−j(n+ωE)t}`, so
/// every derivative is exact.
pub fn propagate(cfg: &OrbitConfig, t: f64) -> SatState {
    let a = cfg.radius();
    let n = cfg.mean_motion();
    let (si, ci) = cfg.inclination_deg.to_radians().sin_cos();
    let amps = [a * (1.0 + ci) / 2.0, a * (1.0 - ci) / 2.0];
    let rates = [n - EARTH_ROTATION, -(n + EARTH_ROTATION)];

    let mut out = [[0.0; 3]; 4];
    for (amp, w) in amps.into_iter().zip(rates) {
        let (s, c) = (w * t).sin_cos();
        // d^k/dt^k e^{jwt} = (jw)^k e^{jwt}
        let mut re = amp * c;
        let mut im = amp * s;
        for d in out.iter_mut() {
            d[0] += re;
            d[1] += im;
            (re, im) = (-w * im, w * re);
        }
    }
    let (s, c) = (n * t).sin_cos();
    let z = a * si;
    out[0][2] = z * s;
    out[1][2] = z * n * c;
    out[2][2] = -z * n * n * s;
    out[3][2] = -z * n * n * n * c;

    SatState { pos: out[0], vel: out[1], acc: out[2], jerk: out[3] }
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scale(a: &Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
