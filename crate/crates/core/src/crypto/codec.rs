//! Fixed-point mapping between reals and the signed plaintext domain.

use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::CryptoError;

/// Which product of scale factors a fixed-point quantity carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Bare integers.
    Unit,
    /// One observation scale `T_obs`.
    Obs,
    /// `T_obs²` (squared deviations).
    ObsSquared,
    /// One weight scale `T_wt` (distances, weights, logs).
    Weight,
    /// `T_obs · T_wt` (weighted observations).
    ObsWeight,
}

/// Powers of ten used to round reals onto the integer plaintext grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointCodec {
    /// Decimal exponent of `T_obs`.
    pub obs_digits: u32,
    /// Decimal exponent of `T_wt`.
    pub weight_digits: u32,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        Self {
            obs_digits: 4,
            weight_digits: 6,
        }
    }
}

impl FixedPointCodec {
    pub fn new(obs_digits: u32, weight_digits: u32) -> Self {
        Self {
            obs_digits,
            weight_digits,
        }
    }

    pub fn factor(&self, scale: Scale) -> f64 {
        let p = |d: u32| libm::pow(10.0, d as f64);
        match scale {
            Scale::Unit => 1.0,
            Scale::Obs => p(self.obs_digits),
            Scale::ObsSquared => p(2 * self.obs_digits),
            Scale::Weight => p(self.weight_digits),
            Scale::ObsWeight => p(self.obs_digits + self.weight_digits),
        }
    }

    /// `floor(v · scale)`.
    ///
    /// Products that land within a relative 1e-9 of an integer snap to it, so
    /// values already on the grid (e.g. `0.29` at `T = 100`) survive the
    /// binary round-off in `v · scale`.
    pub fn encode(&self, v: f64, scale: Scale) -> Result<BigInt, CryptoError> {
        if !v.is_finite() {
            return Err(CryptoError::OutOfRange);
        }
        let y = v * self.factor(scale);
        if !y.is_finite() {
            return Err(CryptoError::OutOfRange);
        }
        let nearest = libm::round(y);
        let snapped = if libm::fabs(y - nearest) <= 1e-9 * libm::fmax(1.0, libm::fabs(y)) {
            nearest
        } else {
            libm::floor(y)
        };
        BigInt::from_f64(snapped).ok_or(CryptoError::OutOfRange)
    }

    pub fn encode_i64(&self, v: f64, scale: Scale) -> Result<i64, CryptoError> {
        self.encode(v, scale)?
            .to_i64()
            .ok_or(CryptoError::OutOfRange)
    }

    pub fn decode(&self, v: &BigInt, scale: Scale) -> f64 {
        v.to_f64().unwrap_or(f64::NAN) / self.factor(scale)
    }

    pub fn decode_i64(&self, v: i64, scale: Scale) -> f64 {
        v as f64 / self.factor(scale)
    }

    /// Snaps `v` onto the grid of `scale`, i.e. `decode(encode(v))`.
    pub fn quantize(&self, v: f64, scale: Scale) -> Result<f64, CryptoError> {
        Ok(self.decode(&self.encode(v, scale)?, scale))
    }
}
