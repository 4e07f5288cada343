//! Trusted-authority initialization: keys, key split, mask material, hash
//! chains and the fog/cloud shared key.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_core::RngCore;

use super::{Mode, Phase, ProtocolConfig, ProtocolError};
use crate::crypto::arith::random_below;
use crate::crypto::{
    keygen, split_key, KeyShares, MasterKey, OpCounter, OpCounts, PublicParams, Scale,
};
use crate::hashchain::{Digest, HashChain, DIGEST_LEN};

/// Precomputed mask powers for one report of one device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportMasks {
    /// One `h`-power per ciphertext slot.
    pub h: Vec<BigUint>,
    /// LPTD-II companion `g^σ`.
    pub g: Option<BigUint>,
}

#[derive(Debug, Clone)]
pub struct DeviceKeys {
    pub id: usize,
    pub params: PublicParams,
    /// Indexed by report.
    pub masks: Vec<ReportMasks>,
    pub chain: HashChain,
}

#[derive(Debug, Clone)]
pub struct FogKeys {
    pub x1: BigUint,
    pub heads: Vec<Digest>,
    /// LPTD-I server mask powers, `[report][slot]`.
    pub server_masks: Vec<Vec<BigUint>>,
    /// Pre-provisioned LPTD-II companions, `[device][report]`.
    pub companions: Option<Vec<Vec<BigUint>>>,
    pub shared_key: Digest,
}

#[derive(Debug, Clone)]
pub struct CloudKeys {
    pub x2: BigUint,
    /// LPTD-I server mask powers, `[report][slot]`.
    pub server_masks: Vec<Vec<BigUint>>,
    /// LPTD-II slot compensators `h^{-u}`, `[device][report][slot]`.
    pub compensators: Vec<Vec<Vec<BigUint>>>,
    pub shared_key: Digest,
}

#[derive(Debug, Clone)]
pub struct SetupBundle {
    pub config: ProtocolConfig,
    pub params: PublicParams,
    pub master: MasterKey,
    pub devices: Vec<DeviceKeys>,
    pub fog: FogKeys,
    pub cloud: CloudKeys,
    /// Modular operations spent by the TA.
    pub ops: OpCounts,
}

impl SetupBundle {
    /// Ciphertext elements delivered to the fog ahead of time.
    pub fn preprovisioned_elements(&self) -> usize {
        self.fog
            .companions
            .as_ref()
            .map_or(0, |c| c.iter().map(Vec::len).sum())
    }
}

/// `count` exponents uniform in `[0, order)` except the last, which makes
/// the sum vanish modulo `order`.
pub fn cancelling_shares<R: RngCore + ?Sized>(
    count: usize,
    order: &BigUint,
    rng: &mut R,
) -> Vec<BigUint> {
    assert!(count >= 1);
    let mut shares: Vec<BigUint> = (0..count - 1).map(|_| random_below(rng, order)).collect();
    let partial = shares
        .iter()
        .fold(BigUint::zero(), |acc, s| (acc + s) % order);
    shares.push((order - partial) % order);
    shares
}

/// Checks that `K · max|plaintext|` stays below `n/4` for every quantity the
/// protocol aggregates.
pub fn overflow_guard(cfg: &ProtocolConfig, params: &PublicParams) -> Result<(), ProtocolError> {
    let t_obs = cfg.codec.factor(Scale::Obs);
    let t_wt = cfg.codec.factor(Scale::Weight);
    let b = cfg.obs_bound;
    let k = cfg.devices as f64;
    let m = cfg.objects as f64;
    // std is floored at one observation unit, so each term is at most (2B)²·T_obs.
    let dist_max = m * 4.0 * b * b * t_obs;
    let hi = cfg.blind_range.1 as f64;
    let weight_max = libm::log(hi * hi * k * dist_max).abs() + 2.0 * libm::log(t_wt) + 1.0;
    let candidates = [
        ("observation", t_obs * b),
        ("squared deviation", t_obs * t_obs * 4.0 * b * b),
        ("distance", t_wt * dist_max),
        ("blinded weight", t_wt * weight_max),
        ("weighted observation", t_obs * b * t_wt * weight_max),
    ];
    let limit_bits = params.n().bits() as f64 - 2.0;
    for (what, bound) in candidates {
        let need = libm::log2(k * (bound + 1.0));
        if need.is_nan() || need >= limit_bits {
            return Err(ProtocolError::Overflow(format!(
                "{what}: K·max needs {need:.1} bits, modulus allows {limit_bits:.0}"
            )));
        }
    }
    Ok(())
}

/// Generates fresh keys of `kappa` bits and provisions every party.
pub fn ta_setup<R: RngCore + ?Sized>(
    cfg: &ProtocolConfig,
    kappa: u32,
    rng: &mut R,
) -> Result<SetupBundle, ProtocolError> {
    cfg.validate()?;
    let (params, master) = keygen(kappa, rng)?;
    ta_setup_with_keys(cfg, params, master, rng)
}

pub fn ta_setup_with_keys<R: RngCore + ?Sized>(
    cfg: &ProtocolConfig,
    params: PublicParams,
    master: MasterKey,
    rng: &mut R,
) -> Result<SetupBundle, ProtocolError> {
    cfg.validate()?;
    overflow_guard(cfg, &params)?;
    let ops = OpCounter::new();
    let KeyShares { x1, x2 } = split_key(&master, rng)?;
    let order = master.mask_order();
    let k = cfg.devices;
    let reports = cfg.reports_per_device();
    let slots_of = |r: usize| Phase::from_report_index(r).slots(cfg.objects);

    let mut device_masks: Vec<Vec<ReportMasks>> =
        (0..k).map(|_| Vec::with_capacity(reports)).collect();
    let mut fog_masks = Vec::new();
    let mut cloud_masks = Vec::new();
    let mut compensators: Vec<Vec<Vec<BigUint>>> = Vec::new();

    match cfg.mode {
        Mode::Lptd1 => {
            for r in 0..reports {
                let slots = slots_of(r);
                let mut per_device: Vec<Vec<BigUint>> =
                    (0..k).map(|_| Vec::with_capacity(slots)).collect();
                let mut fog_r = Vec::with_capacity(slots);
                let mut cloud_r = Vec::with_capacity(slots);
                for _ in 0..slots {
                    // Order: devices 1..K, fog, cloud.
                    let shares = cancelling_shares(k + 2, &order, rng);
                    for (d, s) in per_device.iter_mut().zip(&shares) {
                        d.push(params.pow_h(s, &ops));
                    }
                    fog_r.push(params.pow_h(&shares[k], &ops));
                    cloud_r.push(params.pow_h(&shares[k + 1], &ops));
                }
                for (dev, h) in device_masks.iter_mut().zip(per_device) {
                    dev.push(ReportMasks { h, g: None });
                }
                fog_masks.push(fog_r);
                cloud_masks.push(cloud_r);
            }
        }
        Mode::Lptd2 => {
            for dev in device_masks.iter_mut() {
                let mut comp_dev = Vec::with_capacity(reports);
                for r in 0..reports {
                    let slots = slots_of(r);
                    let sigma = random_below(rng, &order);
                    let g_sigma = params.pow_g(&sigma, &ops);
                    let h_sigma = params.pow_h(&sigma, &ops);
                    let mut h = Vec::with_capacity(slots);
                    let mut comp = Vec::with_capacity(slots);
                    h.push(h_sigma.clone());
                    comp.push(BigUint::one());
                    for _ in 1..slots {
                        let u = random_below(rng, &order);
                        let hu = params.pow_h(&u, &ops);
                        h.push(params.mul(&h_sigma, &hu, &ops));
                        comp.push(params.inv(&hu, &ops)?);
                    }
                    dev.push(ReportMasks {
                        h,
                        g: Some(g_sigma),
                    });
                    comp_dev.push(comp);
                }
                compensators.push(comp_dev);
            }
        }
    }

    let mut chains = Vec::with_capacity(k);
    for _ in 0..k {
        let mut seed = [0u8; DIGEST_LEN];
        rng.fill_bytes(&mut seed);
        chains.push(
            HashChain::generate(seed, reports)
                .map_err(|_| ProtocolError::Config("empty hash chain"))?,
        );
    }
    let mut shared_key = [0u8; DIGEST_LEN];
    rng.fill_bytes(&mut shared_key);

    let companions = if cfg.preprovision_g {
        let mut all = Vec::with_capacity(k);
        for dev in device_masks.iter_mut() {
            all.push(
                dev.iter_mut()
                    .map(|m| m.g.take().expect("lptd2 companion"))
                    .collect(),
            );
        }
        Some(all)
    } else {
        None
    };

    let heads = chains.iter().map(|c| *c.head()).collect();
    let devices = device_masks
        .into_iter()
        .zip(chains)
        .enumerate()
        .map(|(id, (masks, chain))| DeviceKeys {
            id,
            params: params.clone(),
            masks,
            chain,
        })
        .collect();

    Ok(SetupBundle {
        config: cfg.clone(),
        params,
        master,
        devices,
        fog: FogKeys {
            x1,
            heads,
            server_masks: fog_masks,
            companions,
            shared_key,
        },
        cloud: CloudKeys {
            x2,
            server_masks: cloud_masks,
            compensators,
            shared_key,
        },
        ops: ops.snapshot(),
    })
}
