use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{cross, dot, norm, propagate, scale, sub, OrbitConfig, ReceiverSampling, Vec3};
use super::EARTH_RADIUS;
use crate::error::{Error, Result};
use crate::harness::seed::derive_seed;
use crate::SPEED_OF_LIGHT;

const MAX_DRAWS: u64 = 1_000_000;
/// Half-width of the finite-difference stencil (s).
const FD_STEP: f64 = 0.5;

/// One receiver/satellite configuration and the Doppler dynamics it produces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometrySample {
    pub epoch: f64,
    pub sat_pos: Vec3,
    pub sat_vel: Vec3,
    pub sat_acc: Vec3,
    pub rx_pos: Vec3,
    pub elevation: f64,
    pub f0: f64,
    pub fdot: f64,
    pub fddot: f64,
}

fn elevation_deg(sat: &Vec3, rx: &Vec3) -> f64 {
    let los = sub(sat, rx);
    (dot(&los, rx) / (norm(&los) * norm(rx))).asin().to_degrees()
}

/// Exact range and its first three derivatives for a receiver fixed on the ground.
pub fn range_derivatives(cfg: &OrbitConfig, rx: &Vec3, t: f64) -> [f64; 4] {
    let s = propagate(cfg, t);
    let d = sub(&s.pos, rx);
    let r = norm(&d);
    let r1 = dot(&d, &s.vel) / r;
    let r2 = (dot(&s.vel, &s.vel) + dot(&d, &s.acc) - r1 * r1) / r;
    let r3 = (3.0 * dot(&s.vel, &s.acc) + dot(&d, &s.jerk) - 3.0 * r1 * r2) / r;
    [r, r1, r2, r3]
}

/// Central-difference estimates of the first three range derivatives with half-width `h`.
pub fn range_derivatives_fd(cfg: &OrbitConfig, rx: &Vec3, t: f64, h: f64) -> [f64; 3] {
    let r = |k: f64| norm(&sub(&propagate(cfg, t + k * h).pos, rx));
    let (m2, m1, z, p1, p2) = (r(-2.0), r(-1.0), r(0.0), r(1.0), r(2.0));
    [
        (p1 - m1) / (2.0 * h),
        (p1 - 2.0 * z + m1) / (h * h),
        (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h),
    ]
}

fn agree(a: f64, b: f64, floor: f64) -> bool {
    (a - b).abs() <= 1e-3 * b.abs() + floor
}

fn uniform_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

/// Two unit vectors completing `u` to an orthonormal basis.
fn tangent_basis(u: &Vec3) -> (Vec3, Vec3) {
    let helper = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross(u, &helper);
    let e1 = scale(&e1, 1.0 / norm(&e1));
    (e1, cross(u, &e1))
}

/// Receiver on the spherical Earth seeing the satellite at elevation `el` (rad)
/// from azimuth-like angle `az` around the sub-satellite point.
fn receiver_at_elevation(sat: &Vec3, el: f64, az: f64) -> Vec3 {
    let r_sat = norm(sat);
    let central = (EARTH_RADIUS * el.cos() / r_sat).acos() - el;
    let u = scale(sat, 1.0 / r_sat);
    let (e1, e2) = tangent_basis(&u);
    let (sc, cc) = central.sin_cos();
    let (sa, ca) = az.sin_cos();
    let dir: Vec3 = std::array::from_fn(|i| cc * u[i] + sc * (ca * e1[i] + sa * e2[i]));
    scale(&dir, EARTH_RADIUS)
}

/// Draw one geometry: a random epoch on the grid and a receiver inside the mask.
pub fn sample_geometry(cfg: &OrbitConfig, seed: u64) -> Result<GeometrySample> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let epochs = cfg.epoch_count();
    let mask = cfg.elevation_mask_deg;

    let (epoch, rx) = match cfg.sampling {
        ReceiverSampling::UniformElevation => {
            let epoch = rng.random_range(0..epochs) as f64 * cfg.epoch_step;
            let el = rng.random_range(mask..=90.0f64).to_radians();
            let az = rng.random_range(0.0..std::f64::consts::TAU);
            (epoch, receiver_at_elevation(&propagate(cfg, epoch).pos, el, az))
        }
        ReceiverSampling::AreaUniform => {
            let mut found = None;
            for _ in 0..MAX_DRAWS {
                let epoch = rng.random_range(0..epochs) as f64 * cfg.epoch_step;
                let rx = scale(&uniform_unit(&mut rng), EARTH_RADIUS);
                if elevation_deg(&propagate(cfg, epoch).pos, &rx) >= mask {
                    found = Some((epoch, rx));
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Config(format!("no receiver inside the {mask}° mask after {MAX_DRAWS} draws"))
            })?
        }
    };

    let state = propagate(cfg, epoch);
    let coarse = range_derivatives_fd(cfg, &rx, epoch, FD_STEP);
    let fine = range_derivatives_fd(cfg, &rx, epoch, FD_STEP / 2.0);
    // Absolute slack near zero crossings, about 0.05 Hz, 1 mHz/s and 1 mHz/s² at 2 GHz.
    let floors = [1e-2, 2e-4, 2e-4];
    if !(0..3).all(|i| agree(coarse[i], fine[i], floors[i])) {
        return Err(Error::Numerical(format!(
            "range derivatives disagree under step halving at t = {epoch} s"
        )));
    }
    // Richardson step: both stencils are second order, so this cancels the h² term.
    let best: [f64; 3] = std::array::from_fn(|i| (4.0 * fine[i] - coarse[i]) / 3.0);
    let k = -cfg.fc / SPEED_OF_LIGHT;
    Ok(GeometrySample {
        epoch,
        sat_pos: state.pos,
        sat_vel: state.vel,
        sat_acc: state.acc,
        rx_pos: rx,
        elevation: elevation_deg(&state.pos, &rx),
        f0: k * best[0],
        fdot: k * best[1],
        fddot: k * best[2],
    })
}

/// `n` independent geometries; sample `i` uses the seed derived from `(seed, i)`.
pub fn sample_many(cfg: &OrbitConfig, n: usize, seed: u64) -> Result<Vec<GeometrySample>> {
    cfg.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| sample_geometry(cfg, derive_seed(seed, &format!("geometry/{i}"))))
        .collect()
}
