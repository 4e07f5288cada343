//! Modified Paillier cryptosystem over `Z_{n²}` with `g = μ²`, `h = g^x`.
//!
//! Two ciphertext shapes are supported:
//!
//! * [`PairCiphertext`] `(g^r, h^r·(1 + n·m))`, decryptable with the master
//!   secret `x` or, in two steps, with additive shares `x = x1 + x2`;
//! * [`MaskedCiphertext`] `(1 + n·m)·h^s` where the mask `h^s` is provisioned
//!   ahead of time. Products of masked ciphertexts whose exponents cancel
//!   decode to the plaintext sum; when the exponents do not cancel, the
//!   companion `g^s` lets the share holders strip the mask instead.
//!
//! Plaintexts are signed integers with canonical range `|m| < n/2`.

pub mod arith;
pub mod bundle;
pub mod codec;
pub mod ops;
pub mod prime;

use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use once_cell::race::OnceBox;
use rand_core::RngCore;

pub use bundle::KeyBundle;
pub use codec::{FixedPointCodec, Scale};
pub use ops::{OpCounter, OpCounts};

use arith::{in_signed_range, random_below, random_inclusive, to_residue, to_signed, FixedBase};

/// Smallest supported prime width.
pub const MIN_KAPPA: u32 = 16;
/// Largest supported prime width (2048-bit `n`).
pub const MAX_KAPPA: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("no safe prime of {kappa} bits found within the search budget")]
    GenerationExhausted { kappa: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("master secret too small to split")]
    CannotSplit,
    #[error("plaintext outside the canonical signed range")]
    OutOfRange,
    #[error("ciphertext does not decode (not of the form 1 + n·m)")]
    Malformed,
    #[error("mask exponents do not cancel (missing or extra contribution)")]
    MaskMismatch,
    #[error("cannot aggregate an empty set of ciphertexts")]
    EmptyAggregate,
    #[error("element not invertible modulo n²")]
    NotInvertible,
}

/// Candidate budget for the safe-prime search at every key size.
const PRIME_SEARCH_BUDGET: u64 = 50_000_000;

/// Public key `(n, g, h)` plus derived constants.
pub struct PublicParams {
    kappa: u32,
    n: BigUint,
    n_sq: BigUint,
    g: BigUint,
    h: BigUint,
    tables: OnceBox<(FixedBase, FixedBase)>,
}

impl Clone for PublicParams {
    fn clone(&self) -> Self {
        Self::from_parts(self.kappa, self.n.clone(), self.g.clone(), self.h.clone())
    }
}

impl PartialEq for PublicParams {
    fn eq(&self, other: &Self) -> bool {
        self.kappa == other.kappa && self.n == other.n && self.g == other.g && self.h == other.h
    }
}

impl Eq for PublicParams {}

impl fmt::Debug for PublicParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicParams")
            .field("kappa", &self.kappa)
            .field("n", &self.n)
            .field("g", &self.g)
            .field("h", &self.h)
            .finish()
    }
}

impl PublicParams {
    pub fn from_parts(kappa: u32, n: BigUint, g: BigUint, h: BigUint) -> Self {
        let n_sq = &n * &n;
        Self {
            kappa,
            n,
            n_sq,
            g,
            h,
            tables: OnceBox::new(),
        }
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_sq(&self) -> &BigUint {
        &self.n_sq
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn h(&self) -> &BigUint {
        &self.h
    }

    /// `U`: bit-length of `n²`, the size of one ciphertext element.
    pub fn ciphertext_bits(&self) -> u64 {
        self.n_sq.bits()
    }

    /// Bytes of a fixed-width big-endian `Z_{n²}` element.
    pub fn element_bytes(&self) -> usize {
        self.n_sq.bits().div_ceil(8) as usize
    }

    /// Checks the structural invariants on `g`: `1 < g < n²` and `gcd(g, n) = 1`.
    pub fn validate(&self) -> Result<(), CryptoError> {
        if self.g <= BigUint::one() || self.g >= self.n_sq || !self.g.gcd(&self.n).is_one() {
            return Err(CryptoError::InvalidParameter(
                "g must be a unit in Z_{n²} other than 1",
            ));
        }
        if self.h.is_zero() || self.h >= self.n_sq {
            return Err(CryptoError::InvalidParameter("h outside Z_{n²}"));
        }
        Ok(())
    }

    fn tables(&self) -> &(FixedBase, FixedBase) {
        self.tables.get_or_init(|| {
            let bits = self.n_sq.bits();
            alloc::boxed::Box::new((
                FixedBase::new(&self.g, &self.n_sq, bits),
                FixedBase::new(&self.h, &self.n_sq, bits),
            ))
        })
    }

    /// `g^e mod n²` through the precomputed fixed-base table.
    pub fn pow_g(&self, e: &BigUint, ops: &OpCounter) -> BigUint {
        ops.exp();
        self.tables().0.pow(e)
    }

    /// `h^e mod n²` through the precomputed fixed-base table.
    pub fn pow_h(&self, e: &BigUint, ops: &OpCounter) -> BigUint {
        ops.exp();
        self.tables().1.pow(e)
    }

    /// Variable-base `b^e mod n²`.
    pub fn pow(&self, base: &BigUint, e: &BigUint, ops: &OpCounter) -> BigUint {
        ops.exp();
        base.modpow(e, &self.n_sq)
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint, ops: &OpCounter) -> BigUint {
        ops.mul(1);
        (a * b) % &self.n_sq
    }

    pub fn inv(&self, a: &BigUint, ops: &OpCounter) -> Result<BigUint, CryptoError> {
        ops.inv();
        a.modinv(&self.n_sq).ok_or(CryptoError::NotInvertible)
    }

    /// Maps a signed plaintext into `Z_n`, enforcing `|m| < n/2`.
    pub fn embed(&self, m: &BigInt) -> Result<BigUint, CryptoError> {
        if !in_signed_range(m, &self.n) {
            return Err(CryptoError::OutOfRange);
        }
        Ok(to_residue(m, &self.n))
    }

    /// `(1 + n·m) mod n²` for an embedded plaintext (one modular multiplication).
    fn plaintext_element(&self, m: &BigUint, ops: &OpCounter) -> BigUint {
        ops.mul(1);
        ((&self.n * m) + 1u32) % &self.n_sq
    }

    /// Inverse of [`Self::plaintext_element`]: `(v - 1) / n`, signed.
    pub fn decode_element(&self, v: &BigUint) -> Result<BigInt, CryptoError> {
        if v.is_zero() {
            return Err(CryptoError::Malformed);
        }
        let (q, r) = (v - 1u32).div_rem(&self.n);
        if !r.is_zero() || q >= self.n {
            return Err(CryptoError::Malformed);
        }
        Ok(to_signed(&q, &self.n))
    }

    /// Largest plaintext magnitude with a canonical signed representative.
    pub fn max_plaintext(&self) -> BigUint {
        (&self.n - 1u32) >> 1u32
    }
}

/// Master secret `x` with the safe-prime factorization of `n`.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey {
    pub x: BigUint,
    pub lambda: BigUint,
    pub p: BigUint,
    pub q: BigUint,
    pub p_prime: BigUint,
    pub q_prime: BigUint,
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterKey")
            .field("bits", &self.x.bits())
            .finish_non_exhaustive()
    }
}

impl MasterKey {
    pub fn n(&self) -> BigUint {
        &self.p * &self.q
    }

    /// `n·λ/2`, a multiple of the order of every square in `Z*_{n²}`.
    ///
    /// Mask exponents are reduced modulo this value so that a zero-sum set of
    /// masks cancels to exactly 1.
    pub fn mask_order(&self) -> BigUint {
        (self.n() * &self.lambda) >> 1u32
    }
}

/// Additive split `x = x1 + x2` of the master secret.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyShares {
    pub x1: BigUint,
    pub x2: BigUint,
}

impl fmt::Debug for KeyShares {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("KeyShares { .. }")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCiphertext {
    pub c1: BigUint,
    pub c2: BigUint,
}

/// `c = (1 + n·m)·h^s`, optionally carrying its companion `g^s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedCiphertext {
    pub c: BigUint,
    pub g_part: Option<BigUint>,
}

/// A decoded aggregate plaintext, `|value| < n/2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlaintextAggregate(pub BigInt);

impl PlaintextAggregate {
    pub fn value(&self) -> &BigInt {
        &self.0
    }
}

/// Generates fresh safe primes of `kappa` bits and derives the key pair.
pub fn keygen<R: RngCore + ?Sized>(
    kappa: u32,
    rng: &mut R,
) -> Result<(PublicParams, MasterKey), CryptoError> {
    if !(MIN_KAPPA..=MAX_KAPPA).contains(&kappa) {
        return Err(CryptoError::InvalidParameter(
            "kappa must lie in [16, 1024]",
        ));
    }
    let (p, p_prime) = prime::find_safe_prime(kappa, PRIME_SEARCH_BUDGET, rng)
        .ok_or(CryptoError::GenerationExhausted { kappa })?;
    let (q, q_prime) = loop {
        let (q, q_prime) = prime::find_safe_prime(kappa, PRIME_SEARCH_BUDGET, rng)
            .ok_or(CryptoError::GenerationExhausted { kappa })?;
        if q != p {
            break (q, q_prime);
        }
    };
    derive_keys(kappa, p, p_prime, q, q_prime, rng)
}

/// Key pair from caller-chosen safe primes (toy parameters, fixtures).
///
/// Widths are not forced equal so that the pinned toy pair (23, 47) is
/// accepted; `kappa` is recorded as the wider of the two.
pub fn keygen_from_primes<R: RngCore + ?Sized>(
    p: BigUint,
    q: BigUint,
    rng: &mut R,
) -> Result<(PublicParams, MasterKey), CryptoError> {
    if p == q {
        return Err(CryptoError::InvalidParameter("p and q must differ"));
    }
    let p_prime = prime::safe_prime_parts(&p, rng)
        .ok_or(CryptoError::InvalidParameter("p is not a safe prime"))?;
    let q_prime = prime::safe_prime_parts(&q, rng)
        .ok_or(CryptoError::InvalidParameter("q is not a safe prime"))?;
    let kappa = p.bits().max(q.bits()) as u32;
    derive_keys(kappa, p, p_prime, q, q_prime, rng)
}

fn derive_keys<R: RngCore + ?Sized>(
    kappa: u32,
    p: BigUint,
    p_prime: BigUint,
    q: BigUint,
    q_prime: BigUint,
    rng: &mut R,
) -> Result<(PublicParams, MasterKey), CryptoError> {
    let n = &p * &q;
    let n_sq = &n * &n;
    let lambda = (&p - 1u32).lcm(&(&q - 1u32));
    let g = loop {
        let mu = random_below(rng, &n_sq);
        if !mu.gcd(&n).is_one() {
            continue;
        }
        let g = (&mu * &mu) % &n_sq;
        if !g.is_one() {
            break g;
        }
    };
    let upper = (&n * &lambda) >> 1u32;
    let x = random_inclusive(rng, &BigUint::one(), &upper);
    let h = g.modpow(&x, &n_sq);
    let pp = PublicParams::from_parts(kappa, n, g, h);
    let mk = MasterKey {
        x,
        lambda,
        p,
        q,
        p_prime,
        q_prime,
    };
    Ok((pp, mk))
}

/// Splits `x` into `x1` uniform in `[1, x-1]` and `x2 = x - x1`.
pub fn split_key<R: RngCore + ?Sized>(
    mk: &MasterKey,
    rng: &mut R,
) -> Result<KeyShares, CryptoError> {
    split_secret(&mk.x, rng)
}

pub fn split_secret<R: RngCore + ?Sized>(
    x: &BigUint,
    rng: &mut R,
) -> Result<KeyShares, CryptoError> {
    if x < &BigUint::from(2u32) {
        return Err(CryptoError::CannotSplit);
    }
    let x1 = random_inclusive(rng, &BigUint::one(), &(x - 1u32));
    let x2 = x - &x1;
    Ok(KeyShares { x1, x2 })
}

/// Pair encryption with fresh `r ∈ Z_{n²}`.
pub fn encrypt<R: RngCore + ?Sized>(
    pp: &PublicParams,
    m: &BigInt,
    rng: &mut R,
    ops: &OpCounter,
) -> Result<PairCiphertext, CryptoError> {
    let r = random_below(rng, pp.n_sq());
    encrypt_with(pp, m, &r, ops)
}

/// Pair encryption with caller-supplied randomness `r`.
pub fn encrypt_with(
    pp: &PublicParams,
    m: &BigInt,
    r: &BigUint,
    ops: &OpCounter,
) -> Result<PairCiphertext, CryptoError> {
    let m = pp.embed(m)?;
    let c1 = pp.pow_g(r, ops);
    let hr = pp.pow_h(r, ops);
    let pm = pp.plaintext_element(&m, ops);
    let c2 = pp.mul(&hr, &pm, ops);
    Ok(PairCiphertext { c1, c2 })
}

/// Full decryption with the master key, using CRT over `p²` and `q²` for
/// `c1^x`.
pub fn decrypt(
    pp: &PublicParams,
    mk: &MasterKey,
    ct: &PairCiphertext,
    ops: &OpCounter,
) -> Result<BigInt, CryptoError> {
    let c1x = crt_pow(&ct.c1, &mk.x, mk, pp.n_sq(), ops);
    let inv = pp.inv(&c1x, ops)?;
    let v = pp.mul(&ct.c2, &inv, ops);
    pp.decode_element(&v)
}

fn crt_pow(
    base: &BigUint,
    e: &BigUint,
    mk: &MasterKey,
    n_sq: &BigUint,
    ops: &OpCounter,
) -> BigUint {
    ops.exp();
    let p_sq = &mk.p * &mk.p;
    let q_sq = &mk.q * &mk.q;
    // Exponents reduce modulo φ(p²) = p(p - 1), φ(q²) likewise.
    let ep = e % (&mk.p * (&mk.p - 1u32));
    let eq = e % (&mk.q * (&mk.q - 1u32));
    let bp = base % &p_sq;
    let bq = base % &q_sq;
    if bp.gcd(&mk.p) != BigUint::one() || bq.gcd(&mk.q) != BigUint::one() {
        return base.modpow(e, n_sq);
    }
    let rp = bp.modpow(&ep, &p_sq);
    let rq = bq.modpow(&eq, &q_sq);
    // Garner: r = rq + q²·((rp - rq)·(q²)⁻¹ mod p²)
    let q_sq_inv = (&q_sq % &p_sq).modinv(&p_sq).expect("p, q coprime");
    let diff = (&rp + &p_sq - (&rq % &p_sq)) % &p_sq;
    let t = (diff * q_sq_inv) % &p_sq;
    (rq + q_sq * t) % n_sq
}

/// Strips one share: `(c1, c2·(c1^share)⁻¹)`.
pub fn partial_decrypt(
    pp: &PublicParams,
    share: &BigUint,
    ct: &PairCiphertext,
    ops: &OpCounter,
) -> Result<PairCiphertext, CryptoError> {
    let c2 = strip_share(pp, &ct.c2, &ct.c1, share, ops)?;
    Ok(PairCiphertext {
        c1: ct.c1.clone(),
        c2,
    })
}

/// Decodes a pair ciphertext whose mask has been fully stripped.
pub fn finish_decrypt(pp: &PublicParams, ct: &PairCiphertext) -> Result<BigInt, CryptoError> {
    pp.decode_element(&ct.c2)
}

/// `c·(base^share)⁻¹ mod n²`.
pub fn strip_share(
    pp: &PublicParams,
    c: &BigUint,
    base: &BigUint,
    share: &BigUint,
    ops: &OpCounter,
) -> Result<BigUint, CryptoError> {
    if share.is_zero() {
        return Ok(c.clone());
    }
    let t = pp.pow(base, share, ops);
    let inv = pp.inv(&t, ops)?;
    Ok(pp.mul(c, &inv, ops))
}

/// `(1 + n·m)·h_mask`: two modular multiplications, no exponentiation.
pub fn mask_encrypt(
    pp: &PublicParams,
    m: &BigInt,
    h_mask: &BigUint,
    ops: &OpCounter,
) -> Result<MaskedCiphertext, CryptoError> {
    let m = pp.embed(m)?;
    let pm = pp.plaintext_element(&m, ops);
    Ok(MaskedCiphertext {
        c: pp.mul(&pm, h_mask, ops),
        g_part: None,
    })
}

/// Same as [`mask_encrypt`] but attaches the companion `g^s`.
pub fn mask_encrypt_with_companion(
    pp: &PublicParams,
    m: &BigInt,
    h_mask: &BigUint,
    g_mask: &BigUint,
    ops: &OpCounter,
) -> Result<MaskedCiphertext, CryptoError> {
    let mut ct = mask_encrypt(pp, m, h_mask, ops)?;
    ct.g_part = Some(g_mask.clone());
    Ok(ct)
}

/// `∏ c_k · extra_mask`; companions multiply through when every input has one.
pub fn aggregate_product(
    pp: &PublicParams,
    cts: &[MaskedCiphertext],
    extra_mask: Option<&BigUint>,
    ops: &OpCounter,
) -> Result<MaskedCiphertext, CryptoError> {
    let (first, rest) = cts.split_first().ok_or(CryptoError::EmptyAggregate)?;
    let mut c = first.c.clone();
    let mut g_part = first.g_part.clone();
    for ct in rest {
        c = pp.mul(&c, &ct.c, ops);
        g_part = match (g_part, &ct.g_part) {
            (Some(acc), Some(g)) => Some(pp.mul(&acc, g, ops)),
            _ => None,
        };
    }
    if let Some(mask) = extra_mask {
        c = pp.mul(&c, mask, ops);
    }
    Ok(MaskedCiphertext { c, g_part })
}

/// Applies the final mask and decodes; fails if the masks did not cancel.
pub fn unmask_decode(
    pp: &PublicParams,
    ct: &MaskedCiphertext,
    final_mask: &BigUint,
    ops: &OpCounter,
) -> Result<PlaintextAggregate, CryptoError> {
    let v = pp.mul(&ct.c, final_mask, ops);
    pp.decode_element(&v)
        .map(PlaintextAggregate)
        .map_err(|_| CryptoError::MaskMismatch)
}

/// Split-key recovery against the companion: `c / g_part^{x1} / g_part^{x2}`.
pub fn fault_decrypt(
    pp: &PublicParams,
    ct: &MaskedCiphertext,
    shares: &KeyShares,
    ops: &OpCounter,
) -> Result<PlaintextAggregate, CryptoError> {
    let g_part = ct.g_part.as_ref().ok_or(CryptoError::MaskMismatch)?;
    let t1 = strip_share(pp, &ct.c, g_part, &shares.x1, ops)?;
    let t2 = strip_share(pp, &t1, g_part, &shares.x2, ops)?;
    pp.decode_element(&t2)
        .map(PlaintextAggregate)
        .map_err(|_| CryptoError::MaskMismatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn toy() -> (PublicParams, MasterKey, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (pp, mk) =
            keygen_from_primes(BigUint::from(23u32), BigUint::from(47u32), &mut rng).unwrap();
        (pp, mk, rng)
    }

    #[test]
    fn toy_keygen_constants() {
        let (pp, mk, _) = toy();
        assert_eq!(pp.n(), &BigUint::from(1081u32));
        assert_eq!(mk.lambda, BigUint::from(506u32));
        assert_eq!(mk.p_prime, BigUint::from(11u32));
        assert_eq!(mk.q_prime, BigUint::from(23u32));
        assert!(mk.x >= BigUint::one() && mk.x <= mk.mask_order());
        assert_eq!(pp.h(), &pp.g().modpow(&mk.x, pp.n_sq()));
        pp.validate().unwrap();
    }

    #[test]
    fn rejects_bad_primes() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(keygen_from_primes(BigUint::from(29u32), BigUint::from(47u32), &mut rng).is_err());
        assert!(keygen_from_primes(BigUint::from(23u32), BigUint::from(23u32), &mut rng).is_err());
        assert!(keygen(8, &mut rng).is_err());
    }

    #[test]
    fn split_small_secrets() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let s = split_secret(&BigUint::from(2u32), &mut rng).unwrap();
        assert_eq!((s.x1, s.x2), (BigUint::one(), BigUint::one()));
        assert_eq!(
            split_secret(&BigUint::one(), &mut rng),
            Err(CryptoError::CannotSplit)
        );
        for _ in 0..50 {
            let s = split_secret(&BigUint::from(10u32), &mut rng).unwrap();
            assert!(s.x1 >= BigUint::one() && s.x1 <= BigUint::from(9u32));
            assert_eq!(&s.x1 + &s.x2, BigUint::from(10u32));
        }
    }

    #[test]
    fn zero_round_trips() {
        let (pp, mk, mut rng) = toy();
        let ops = OpCounter::new();
        let ct = encrypt(&pp, &BigInt::zero(), &mut rng, &ops).unwrap();
        assert_eq!(decrypt(&pp, &mk, &ct, &ops).unwrap(), BigInt::zero());
    }

    #[test]
    fn degenerate_randomness_decrypts() {
        let (pp, mk, _) = toy();
        let ops = OpCounter::new();
        let ct = PairCiphertext {
            c1: BigUint::one(),
            c2: (pp.n() * 17u32 + 1u32) % pp.n_sq(),
        };
        assert_eq!(decrypt(&pp, &mk, &ct, &ops).unwrap(), BigInt::from(17));
    }

    #[test]
    fn zero_share_is_identity() {
        let (pp, _, mut rng) = toy();
        let ops = OpCounter::new();
        let ct = encrypt(&pp, &BigInt::from(5), &mut rng, &ops).unwrap();
        assert_eq!(
            partial_decrypt(&pp, &BigUint::zero(), &ct, &ops).unwrap(),
            ct
        );
    }

    #[test]
    fn mask_encrypt_uses_no_exponentiation() {
        let (pp, _, _) = toy();
        let ops = OpCounter::new();
        let mask = BigUint::from(1234u32);
        let ct = mask_encrypt(&pp, &BigInt::zero(), &mask, &ops).unwrap();
        assert_eq!(ct.c, mask);
        let counts = ops.snapshot();
        assert_eq!(counts.mod_exp, 0);
        assert_eq!(counts.mod_mul, 2);
    }

    #[test]
    fn out_of_range_plaintexts_rejected() {
        let (pp, _, _) = toy();
        let ops = OpCounter::disabled();
        let mask = BigUint::one();
        assert_eq!(
            mask_encrypt(&pp, &BigInt::from(541), &mask, &ops),
            Err(CryptoError::OutOfRange)
        );
        assert!(mask_encrypt(&pp, &BigInt::from(-540), &mask, &ops).is_ok());
    }

    #[test]
    fn empty_aggregate_rejected() {
        let (pp, _, _) = toy();
        assert_eq!(
            aggregate_product(&pp, &[], None, &OpCounter::disabled()),
            Err(CryptoError::EmptyAggregate)
        );
    }

    #[test]
    fn single_ciphertext_aggregate_unchanged() {
        let (pp, _, _) = toy();
        let ct = MaskedCiphertext {
            c: BigUint::from(777u32),
            g_part: Some(BigUint::from(5u32)),
        };
        let agg = aggregate_product(
            &pp,
            core::slice::from_ref(&ct),
            None,
            &OpCounter::disabled(),
        )
        .unwrap();
        assert_eq!(agg, ct);
    }

    #[test]
    fn empty_sum_fault_decrypt_is_zero() {
        let (pp, mk, mut rng) = toy();
        let shares = split_key(&mk, &mut rng).unwrap();
        let ct = MaskedCiphertext {
            c: BigUint::one(),
            g_part: Some(BigUint::one()),
        };
        assert_eq!(
            fault_decrypt(&pp, &ct, &shares, &OpCounter::disabled())
                .unwrap()
                .0,
            BigInt::zero()
        );
    }
}
