//! Big-integer helpers shared by key generation and the masked-ciphertext
//! arithmetic.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};
use rand_core::RngCore;

/// Uniform sample from `[0, bound)` by rejection.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "empty sampling range");
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let top_mask = match bits % 8 {
        0 => 0xff,
        r => (1u8 << r) - 1,
    };
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill_bytes(&mut buf);
        buf[0] &= top_mask;
        let candidate = BigUint::from_bytes_be(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform sample from the inclusive range `[lo, hi]`.
pub fn random_inclusive<R: RngCore + ?Sized>(rng: &mut R, lo: &BigUint, hi: &BigUint) -> BigUint {
    assert!(lo <= hi, "inverted sampling range");
    let width = hi - lo + 1u32;
    lo + random_below(rng, &width)
}

/// Random integer with exactly `bits` bits whose top `top` bits are all set.
pub fn random_with_top_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u64, top: u64) -> BigUint {
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; bytes];
    rng.fill_bytes(&mut buf);
    let mut v = BigUint::from_bytes_be(&buf);
    let excess = (bytes as u64) * 8 - bits;
    v >>= excess;
    for i in 0..top.min(bits) {
        v.set_bit(bits - 1 - i, true);
    }
    v
}

/// Maps a signed integer into `Z_modulus`.
pub fn to_residue(v: &BigInt, modulus: &BigUint) -> BigUint {
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let r = ((v % &m) + &m) % &m;
    r.to_biguint().expect("non-negative residue")
}

/// Canonical signed representative of `v ∈ Z_n` in `[-(n-1)/2, (n-1)/2]`.
pub fn to_signed(v: &BigUint, n: &BigUint) -> BigInt {
    let twice: BigUint = v << 1u32;
    if &twice >= n {
        BigInt::from_biguint(Sign::Plus, v.clone()) - BigInt::from_biguint(Sign::Plus, n.clone())
    } else {
        BigInt::from_biguint(Sign::Plus, v.clone())
    }
}

/// Whether `|v| < n / 2`, i.e. `v` has a canonical signed representative.
pub fn in_signed_range(v: &BigInt, n: &BigUint) -> bool {
    let mag: BigUint = v.magnitude() << 1u32;
    &mag < n
}

/// Fixed-base windowed exponentiation table.
///
/// `table[i][d - 1] = base^(d · 2^(w·i)) mod m`, so an exponent is consumed
/// `w` bits at a time with one multiplication per nonzero window and no
/// squarings.
pub struct FixedBase {
    window: u32,
    modulus: BigUint,
    max_bits: u64,
    table: Vec<Vec<BigUint>>,
}

impl FixedBase {
    pub const WINDOW: u32 = 6;

    pub fn new(base: &BigUint, modulus: &BigUint, max_bits: u64) -> Self {
        let window = Self::WINDOW;
        let per_chunk = (1usize << window) - 1;
        let chunks = max_bits.div_ceil(window as u64) as usize;
        let mut table = Vec::with_capacity(chunks);
        let mut chunk_base = base % modulus;
        for _ in 0..chunks {
            let mut row = Vec::with_capacity(per_chunk);
            let mut acc = chunk_base.clone();
            row.push(acc.clone());
            for _ in 1..per_chunk {
                acc = (&acc * &chunk_base) % modulus;
                row.push(acc.clone());
            }
            chunk_base = (&acc * &chunk_base) % modulus;
            table.push(row);
        }
        Self {
            window,
            modulus: modulus.clone(),
            max_bits,
            table,
        }
    }

    pub fn pow(&self, exponent: &BigUint) -> BigUint {
        if exponent.bits() > self.max_bits {
            let base = &self.table[0][0];
            return base.modpow(exponent, &self.modulus);
        }
        let w = self.window as u64;
        let mut acc = BigUint::one();
        for (i, row) in self.table.iter().enumerate() {
            let mut digit = 0usize;
            for b in 0..w {
                if exponent.bit(i as u64 * w + b) {
                    digit |= 1 << b;
                }
            }
            if digit != 0 {
                acc = (&acc * &row[digit - 1]) % &self.modulus;
            }
        }
        acc % &self.modulus
    }
}
