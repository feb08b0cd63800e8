use std::f64::consts::TAU;

use num_complex::Complex64;

/// Costas arctangent: `atan(Q/I)/2π` cycles, blind to the data-bit sign.
pub fn pll_discriminator(p: Complex64) -> f64 {
    if p.re == 0.0 {
        if p.im == 0.0 {
            return 0.0;
        }
        return 0.25f64.copysign(p.im);
    }
    (p.im / p.re).atan() / TAU
}

/// Cross/dot frequency discriminator (Hz) on two prompts `dt` seconds apart.
pub fn fll_discriminator(p1: Complex64, p2: Complex64, dt: f64) -> f64 {
    let cross = p1.re * p2.im - p2.re * p1.im;
    let dot = p1.re * p2.re + p1.im * p2.im;
    if cross == 0.0 && dot == 0.0 {
        return 0.0;
    }
    cross.atan2(dot) / (TAU * dt)
}

/// Normalised non-coherent early-minus-late envelope, `0.5·(|E|−|L|)/(|E|+|L|)` chips.
pub fn dll_discriminator(e: Complex64, l: Complex64) -> f64 {
    let (a, b) = (e.norm(), l.norm());
    if a + b == 0.0 {
        return 0.0;
    }
    0.5 * (a - b) / (a + b)
}

/// Same envelope ratio scaled by `1 − d/2`, which makes the output equal to the code
/// error (chips) inside the linear region of the correlation triangle for any
/// early-late spacing `d`. For `d = 1` it coincides with [`dll_discriminator`].
pub fn dll_discriminator_scaled(e: Complex64, l: Complex64, spacing: f64) -> f64 {
    2.0 * (1.0 - spacing / 2.0) * dll_discriminator(e, l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn costas_examples() {
        assert_eq!(pll_discriminator(c(1.0, 0.0)), 0.0);
        assert!((pll_discriminator(c(1.0, 1.0)) - 0.125).abs() < 1e-15);
        assert!((pll_discriminator(c(-1.0, -1.0)) - 0.125).abs() < 1e-15);
        assert_eq!(pll_discriminator(c(0.0, 0.0)), 0.0);
        assert_eq!(pll_discriminator(c(0.0, 2.0)), 0.25);
    }

    #[test]
    fn fll_examples() {
        assert!((fll_discriminator(c(1.0, 0.0), c(0.0, 1.0), 0.01) - 25.0).abs() < 1e-12);
        assert_eq!(fll_discriminator(c(0.3, -2.0), c(0.3, -2.0), 0.01), 0.0);
        assert!((fll_discriminator(c(1.0, 0.0), c(-1.0, 0.0), 0.01).abs() - 50.0).abs() < 1e-12);
        assert_eq!(fll_discriminator(c(0.0, 0.0), c(0.0, 0.0), 0.01), 0.0);
    }

    #[test]
    fn dll_examples() {
        assert_eq!(dll_discriminator(c(0.7, 0.1), c(0.1, 0.7)), 0.0);
        assert_eq!(dll_discriminator(c(1.0, 0.0), c(0.0, 0.0)), 0.5);
        assert_eq!(dll_discriminator(c(0.0, 0.0), c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn scaled_dll_is_linear_in_code_error() {
        // triangle correlation R(x) = 1 − |x|; early/late sampled at ±d/2 around the
        // replica, true code lies `err` chips ahead of the replica
        let r = |x: f64| (1.0 - x.abs()).max(0.0);
        for d in [0.25, 0.5, 1.0] {
            for err in [-0.1, 0.05, 0.1] {
                let e = c(r(err - d / 2.0), 0.0);
                let l = c(r(err + d / 2.0), 0.0);
                let out = dll_discriminator_scaled(e, l, d);
                assert!((out - err).abs() < 1e-12, "d={d} err={err} out={out}");
            }
        }
    }
}
