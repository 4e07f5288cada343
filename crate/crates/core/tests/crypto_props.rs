use std::sync::LazyLock;

use lptd_core::crypto::{
    aggregate_product, decrypt, encrypt, encrypt_with, fault_decrypt, finish_decrypt, keygen,
    keygen_from_primes, mask_encrypt, mask_encrypt_with_companion, partial_decrypt, split_key,
    split_secret, unmask_decode, FixedPointCodec, KeyBundle, MasterKey, OpCounter, PublicParams,
    Scale,
};
use num_bigint::{BigInt, BigUint};
use num_traits::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

struct Keys {
    pp: PublicParams,
    mk: MasterKey,
}

static TOY: LazyLock<Keys> = LazyLock::new(|| {
    let (pp, mk) = keygen_from_primes(
        23u32.into(),
        47u32.into(),
        &mut ChaCha20Rng::seed_from_u64(1),
    )
    .unwrap();
    Keys { pp, mk }
});

static MID: LazyLock<Keys> = LazyLock::new(|| {
    let (pp, mk) = keygen(96, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    Keys { pp, mk }
});

fn half_n(pp: &PublicParams) -> i64 {
    // Caps |m| at 2^40, well inside n/2 for the 96-bit key.
    let half: BigUint = pp.n() >> 1u32;
    i64::try_from(half.min(BigUint::from(1u64 << 40))).unwrap()
}

#[test]
fn toy_modulus_is_1081() {
    assert_eq!(TOY.pp.n(), &BigUint::from(1081u32));
    assert_eq!(TOY.mk.lambda, BigUint::from(506u32));
}

proptest! {
    #[test]
    fn decrypt_inverts_encrypt(m in -539i64..=539, seed: u64) {
        let ops = OpCounter::disabled();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ct = encrypt(&TOY.pp, &BigInt::from(m), &mut rng, &ops).unwrap();
        prop_assert_eq!(decrypt(&TOY.pp, &TOY.mk, &ct, &ops).unwrap(), BigInt::from(m));
    }

    #[test]
    fn split_path_agrees_with_full_key(m in any::<i64>(), seed: u64) {
        let ops = OpCounter::disabled();
        let keys = &*MID;
        let m = BigInt::from(m % half_n(&keys.pp));
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let shares = split_key(&keys.mk, &mut rng).unwrap();
        prop_assert_eq!(&shares.x1 + &shares.x2, keys.mk.x.clone());
        let ct = encrypt(&keys.pp, &m, &mut rng, &ops).unwrap();
        let full = decrypt(&keys.pp, &keys.mk, &ct, &ops).unwrap();
        let first = partial_decrypt(&keys.pp, &shares.x1, &ct, &ops).unwrap();
        let second = partial_decrypt(&keys.pp, &shares.x2, &first, &ops).unwrap();
        prop_assert_eq!(finish_decrypt(&keys.pp, &second).unwrap(), full.clone());
        prop_assert_eq!(full, m);
    }

    /// Share order does not matter.
    #[test]
    fn shares_commute(m in -500i64..500, r in 1u64..1_000_000) {
        let ops = OpCounter::disabled();
        let shares = split_secret(&TOY.mk.x, &mut ChaCha20Rng::seed_from_u64(r)).unwrap();
        let ct = encrypt_with(&TOY.pp, &BigInt::from(m), &BigUint::from(r), &ops).unwrap();
        let a = partial_decrypt(&TOY.pp, &shares.x2, &partial_decrypt(&TOY.pp, &shares.x1, &ct, &ops).unwrap(), &ops).unwrap();
        let b = partial_decrypt(&TOY.pp, &shares.x1, &partial_decrypt(&TOY.pp, &shares.x2, &ct, &ops).unwrap(), &ops).unwrap();
        prop_assert_eq!(a, b);
    }

    /// `∏(1 + n·m_i) ≡ 1 + n·Σm_i (mod n²)`, checked against plain big-integer arithmetic.
    #[test]
    fn plaintext_product_is_sum(ms in prop::collection::vec(0u64..30, 1..18)) {
        let ops = OpCounter::disabled();
        let n = TOY.pp.n().clone();
        let n_sq = &n * &n;
        let oracle = ms.iter().fold(BigUint::one(), |acc, &m| acc * (BigUint::one() + &n * m) % &n_sq);
        let sum: u64 = ms.iter().sum();
        prop_assert_eq!(&oracle, &((BigUint::one() + &n * sum) % &n_sq));
        let cts: Vec<_> = ms.iter().map(|&m| mask_encrypt(&TOY.pp, &BigInt::from(m), &BigUint::one(), &ops).unwrap()).collect();
        let agg = aggregate_product(&TOY.pp, &cts, None, &ops).unwrap();
        prop_assert_eq!(&agg.c, &oracle);
        prop_assert_eq!(unmask_decode(&TOY.pp, &agg, &BigUint::one(), &ops).unwrap().0, BigInt::from(sum));
    }

    /// Signed sums decode with their sign.
    #[test]
    fn signed_aggregates(ms in prop::collection::vec(-40i64..40, 1..12)) {
        let ops = OpCounter::disabled();
        let cts: Vec<_> = ms.iter().map(|&m| mask_encrypt(&TOY.pp, &BigInt::from(m), &BigUint::one(), &ops).unwrap()).collect();
        let agg = aggregate_product(&TOY.pp, &cts, None, &ops).unwrap();
        let sum: i64 = ms.iter().sum();
        prop_assert_eq!(unmask_decode(&TOY.pp, &agg, &BigUint::one(), &ops).unwrap().0, BigInt::from(sum));
    }

    /// Split-key recovery against `∏ g^{s_k}` strips masks `h^{s_k}`.
    #[test]
    fn fault_decrypt_strips_companion_masks(ms in prop::collection::vec(-20i64..20, 1..6), seed: u64) {
        let ops = OpCounter::new();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let shares = split_key(&TOY.mk, &mut rng).unwrap();
        let order = TOY.mk.mask_order();
        let cts: Vec<_> = ms
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let s = BigUint::from(seed % 1000 + 7 * i as u64 + 1) % &order;
                let h = TOY.pp.pow_h(&s, &ops);
                let g = TOY.pp.pow_g(&s, &ops);
                mask_encrypt_with_companion(&TOY.pp, &BigInt::from(m), &h, &g, &ops).unwrap()
            })
            .collect();
        let agg = aggregate_product(&TOY.pp, &cts, None, &ops).unwrap();
        let got = fault_decrypt(&TOY.pp, &agg, &shares, &ops).unwrap();
        prop_assert_eq!(got.0, BigInt::from(ms.iter().sum::<i64>()));
    }

    #[test]
    fn mask_encrypt_never_exponentiates(m in -500i64..500, mask in 1u64..1_000_000) {
        let ops = OpCounter::new();
        mask_encrypt(&TOY.pp, &BigInt::from(m), &BigUint::from(mask), &ops).unwrap();
        let c = ops.snapshot();
        prop_assert_eq!((c.mod_exp, c.mod_inv), (0, 0));
        prop_assert!(c.mod_mul <= 2);
    }

    #[test]
    fn codec_negation_is_symmetric(v in -1.0e6f64..1.0e6, obs in 0u32..6, wt in 0u32..8) {
        let codec = FixedPointCodec::new(obs, wt);
        for scale in [Scale::Obs, Scale::Weight, Scale::ObsWeight] {
            let pos = codec.decode(&codec.encode(v, scale).unwrap(), scale);
            let neg = codec.decode(&codec.encode(-v, scale).unwrap(), scale);
            prop_assert!((pos + neg).abs() <= 1.0 / codec.factor(scale) + 1e-9, "{pos} vs {neg}");
        }
    }

    #[test]
    fn codec_stays_within_one_quantum(v in -1.0e6f64..1.0e6) {
        let codec = FixedPointCodec::default();
        let q = codec.quantize(v, Scale::Obs).unwrap();
        prop_assert!((v - q).abs() < 1e-4 + 1e-9);
        prop_assert_eq!(codec.quantize(q, Scale::Obs).unwrap(), q);
    }
}

#[test]
fn key_bundle_round_trips() {
    let shares = split_key(&MID.mk, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
    let bundle = KeyBundle {
        params: MID.pp.clone(),
        master: MID.mk.clone(),
        shares: shares.clone(),
    };
    let bytes = bundle.to_bytes();
    let back = KeyBundle::from_bytes(&bytes).unwrap();
    assert_eq!(back.to_bytes(), bytes);
    assert_eq!(back.shares, shares);
    let ops = OpCounter::disabled();
    let ct = encrypt(
        &back.params,
        &BigInt::from(-77),
        &mut ChaCha20Rng::seed_from_u64(4),
        &ops,
    )
    .unwrap();
    assert_eq!(
        decrypt(&back.params, &back.master, &ct, &ops).unwrap(),
        BigInt::from(-77)
    );
    let mut corrupt = bytes.clone();
    corrupt[0] ^= 1;
    assert!(KeyBundle::from_bytes(&corrupt).is_err());
    assert!(KeyBundle::from_bytes(&bytes[..bytes.len() - 1]).is_err());
}
