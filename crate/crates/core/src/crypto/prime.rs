//! Safe-prime search: small-prime sieving over an incrementally updated
//! residue table, a base-2 Fermat filter, then Miller–Rabin on both `p'`
//! and `p = 2p' + 1`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_core::RngCore;

use super::arith::{random_inclusive, random_with_top_bits};

/// Miller–Rabin rounds applied to every accepted candidate.
pub const MR_ROUNDS: usize = 64;

const SIEVE_LIMIT: u32 = 1 << 14;
/// Consecutive candidates walked from one random start before re-seeding.
const WALK_LEN: u32 = 1 << 16;

fn small_primes(limit: u32) -> Vec<u32> {
    let limit = limit as usize;
    let mut composite = alloc::vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Miller–Rabin with `rounds` uniformly random bases.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let hi = n - 2u32;
    'outer: for _ in 0..rounds {
        let a = random_inclusive(rng, &two, &hi);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn fermat_base2(n: &BigUint) -> bool {
    BigUint::from(2u32).modpow(&(n - 1u32), n).is_one()
}

/// Searches for a safe prime `p = 2p' + 1` with `bit-length(p) = bits`.
///
/// The top three bits of `p` are forced on so that for two such primes the
/// modulus `n` has `2·bits` bits and `n²` has `4·bits`. Returns `None` once `budget`
/// candidates have been examined.
pub fn find_safe_prime<R: RngCore + ?Sized>(
    bits: u32,
    budget: u64,
    rng: &mut R,
) -> Option<(BigUint, BigUint)> {
    assert!(bits >= 8, "safe prime width too small");
    let primes = small_primes(SIEVE_LIMIT);
    let sub_bits = (bits - 1) as u64;
    let mut examined = 0u64;
    while examined < budget {
        let mut start = random_with_top_bits(rng, sub_bits, 3);
        start.set_bit(0, true);
        let mut residues: Vec<u32> = primes
            .iter()
            .map(|&r| (&start % r).to_u32().unwrap())
            .collect();
        for step in 0..WALK_LEN {
            if examined >= budget {
                return None;
            }
            examined += 1;
            let offset = 2 * step as u64;
            let candidate_ok = primes.iter().zip(residues.iter()).all(|(&r, &res)| {
                // p' ≡ 0 or 2p' + 1 ≡ 0 (mod r) rules the pair out, unless the
                // candidate is r itself (only possible at toy sizes).
                let p_div = res == 0;
                let q_div = (2 * res as u64 + 1).is_multiple_of(r as u64);
                if !(p_div || q_div) {
                    return true;
                }
                let v = small_value(&start, offset);
                r as u64 == v || r as u64 == v.saturating_mul(2).saturating_add(1)
            });
            if candidate_ok {
                let p_prime = &start + BigUint::from(offset);
                if p_prime.bits() == sub_bits {
                    let p: BigUint = (&p_prime << 1u32) + 1u32;
                    if fermat_base2(&p_prime)
                        && fermat_base2(&p)
                        && is_probable_prime(&p_prime, MR_ROUNDS, rng)
                        && is_probable_prime(&p, MR_ROUNDS, rng)
                    {
                        return Some((p, p_prime));
                    }
                }
            }
            for (res, &r) in residues.iter_mut().zip(primes.iter()) {
                *res = (*res + 2) % r;
            }
        }
    }
    None
}

fn small_value(start: &BigUint, offset: u64) -> u64 {
    if start.bits() > 32 {
        return u64::MAX;
    }
    start.to_u64().unwrap() + offset
}

/// Whether `p` is a safe prime, returning `p' = (p - 1) / 2` if so.
pub fn safe_prime_parts<R: RngCore + ?Sized>(p: &BigUint, rng: &mut R) -> Option<BigUint> {
    if p.is_even() || p < &BigUint::from(5u32) {
        return None;
    }
    let p_prime = (p - 1u32) >> 1u32;
    if is_probable_prime(&p_prime, MR_ROUNDS, rng) && is_probable_prime(p, MR_ROUNDS, rng) {
        Some(p_prime)
    } else {
        None
    }
}
