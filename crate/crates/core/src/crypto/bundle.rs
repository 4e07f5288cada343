//! Canonical serialization of a full key bundle.
//!
//! Layout: magic `LPTDKEY1`, `kappa` as `u32`, then the length-prefixed
//! big-endian magnitudes `n, g, h, x, p, q, x1, x2`. `p'`, `q'` and `λ` are
//! recomputed (and the safe-prime structure re-checked) on load.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;

use super::{KeyShares, MasterKey, PublicParams};
use crate::wire::{Decoder, Encoder, WireError};

const MAGIC: &[u8; 8] = b"LPTDKEY1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyBundle {
    pub params: PublicParams,
    pub master: MasterKey,
    pub shares: KeyShares,
}

impl KeyBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.raw(MAGIC)
            .u32(self.params.kappa())
            .big(self.params.n())
            .big(self.params.g())
            .big(self.params.h())
            .big(&self.master.x)
            .big(&self.master.p)
            .big(&self.master.q)
            .big(&self.shares.x1)
            .big(&self.shares.x2);
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut d = Decoder::new(bytes);
        d.expect_magic(MAGIC)?;
        let kappa = d.u32()?;
        let n = d.big()?;
        let g = d.big()?;
        let h = d.big()?;
        let x = d.big()?;
        let p = d.big()?;
        let q = d.big()?;
        let x1 = d.big()?;
        let x2 = d.big()?;
        d.finish()?;

        if &p * &q != n {
            return Err(WireError::Invalid("n != p·q"));
        }
        if p.is_even() || q.is_even() || p.bits().max(q.bits()) != kappa as u64 {
            return Err(WireError::Invalid("prime widths disagree with kappa"));
        }
        if &x1 + &x2 != x {
            return Err(WireError::Invalid("x1 + x2 != x"));
        }
        let p_prime = (&p - 1u32) >> 1u32;
        let q_prime = (&q - 1u32) >> 1u32;
        let lambda = (&p - 1u32).lcm(&(&q - 1u32));
        let params = PublicParams::from_parts(kappa, n, g, h);
        params
            .validate()
            .map_err(|_| WireError::Invalid("g/h outside Z_{n²}"))?;
        if params.g().modpow(&x, params.n_sq()) != *params.h() {
            return Err(WireError::Invalid("h != g^x"));
        }
        if x < BigUint::one() {
            return Err(WireError::Invalid("x must be positive"));
        }
        Ok(Self {
            params,
            master: MasterKey {
                x,
                lambda,
                p,
                q,
                p_prime,
                q_prime,
            },
            shares: KeyShares { x1, x2 },
        })
    }
}
