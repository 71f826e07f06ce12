//! Seeded sampling of particle-size distributions.
//!
//! Sizes follow a three-parameter Weibull law; sampling uses inverse-CDF
//! draws from a counter-based generator so populations are reproducible
//! across platforms from a single integer seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Three-parameter Weibull distribution. Units follow the caller (the
/// scenario layer samples radii in µm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeibullParams {
    /// Scale parameter, same unit as the sampled variate.
    pub scale: f64,
    /// Dimensionless shape parameter.
    pub shape: f64,
    /// Location shift: the sampled variate is at least this value.
    #[serde(default)]
    pub shift: f64,
}

impl WeibullParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "scale",
                reason: "must be a positive finite number",
                value: self.scale,
            });
        }
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "shape",
                reason: "must be a positive finite number",
                value: self.shape,
            });
        }
        if !(self.shift >= 0.0 && self.shift.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "shift",
                reason: "must be a non-negative finite number",
                value: self.shift,
            });
        }
        Ok(())
    }
}

/// Probability density at `x`.
pub fn pdf(p: &WeibullParams, x: f64) -> f64 {
    if x < p.shift {
        return 0.0;
    }
    let z = (x - p.shift) / p.scale;
    if z == 0.0 {
        // Finite only for shape >= 1; shape < 1 diverges at the origin.
        return if p.shape > 1.0 {
            0.0
        } else if p.shape == 1.0 {
            1.0 / p.scale
        } else {
            f64::INFINITY
        };
    }
    p.shape / p.scale * z.powf(p.shape - 1.0) * (-z.powf(p.shape)).exp()
}

/// Cumulative distribution at `x`.
pub fn cdf(p: &WeibullParams, x: f64) -> f64 {
    if x <= p.shift {
        return 0.0;
    }
    let z = (x - p.shift) / p.scale;
    1.0 - (-z.powf(p.shape)).exp()
}

/// Inverse CDF: the value below which a fraction `y` of the mass lies.
/// Defined for `y` in `[0, 1)`.
pub fn quantile(p: &WeibullParams, y: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&y), "quantile argument out of range");
    p.scale * (-(1.0 - y).ln()).powf(1.0 / p.shape) + p.shift
}

/// Mean of the distribution: `scale * Gamma(1 + 1/shape) + shift`.
/// Lanczos evaluation of the Gamma function, adequate for shape > 0.1.
pub fn mean(p: &WeibullParams) -> f64 {
    p.scale * gamma_lanczos(1.0 + 1.0 / p.shape) + p.shift
}

/// Deterministically derives an independent sub-seed, so several samplers
/// can share one scenario seed without overlapping streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined words.
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `count` values with a fresh generator seeded from `seed`.
pub fn sample(p: &WeibullParams, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(p, count, &mut rng)
}

/// Draws `count` values from the provided generator by inverse CDF.
pub fn sample_with_rng<R: Rng>(p: &WeibullParams, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| quantile(p, rng.random::<f64>())).collect()
}

pub(crate) fn gamma_lanczos(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9 coefficients.
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        return std::f64::consts::PI
            / ((std::f64::consts::PI * x).sin() * gamma_lanczos(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}
