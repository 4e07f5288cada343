//! Cloud role: second half of decryption, the blinded distance broadcast,
//! and the truth update.

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::message::{BlindedSum, DebiasShare, FogAggregate, RealBroadcast, RealKind};
use super::setup::CloudKeys;
use super::{Blinding, Mode, Phase, ProtocolConfig, ProtocolError};
use crate::crypto::{
    unmask_decode, CryptoError, MaskedCiphertext, OpCounter, OpCounts, PublicParams, Scale,
};
use crate::hashchain::{check_fog_tag, Digest};
use crate::truth::TruthInit;

#[derive(Debug, Clone, Default)]
struct WeightRound {
    iteration: usize,
    sum_d: BigInt,
    r1: u64,
    q1: i64,
    debias: Option<DebiasShare>,
}

pub struct Cloud {
    cfg: ProtocolConfig,
    params: PublicParams,
    x2: BigUint,
    server_masks: Vec<Vec<BigUint>>,
    compensators: Vec<Vec<Vec<BigUint>>>,
    shared_key: Digest,
    rng: ChaCha20Rng,
    ops: OpCounter,
    /// `S_x` with the device set it was summed over.
    obs_sums: Vec<(Vec<u32>, Vec<BigInt>)>,
    mean: Option<Vec<i64>>,
    std: Option<Vec<i64>>,
    truths: Option<Vec<i64>>,
    round: Option<WeightRound>,
}

impl Cloud {
    pub fn new(
        keys: CloudKeys,
        cfg: &ProtocolConfig,
        params: PublicParams,
        rng: ChaCha20Rng,
    ) -> Self {
        Self {
            cfg: cfg.clone(),
            params,
            x2: keys.x2,
            server_masks: keys.server_masks,
            compensators: keys.compensators,
            shared_key: keys.shared_key,
            rng,
            ops: OpCounter::new(),
            obs_sums: Vec::new(),
            mean: None,
            std: None,
            truths: None,
            round: None,
        }
    }

    pub fn ops(&self) -> OpCounts {
        self.ops.snapshot()
    }

    pub fn truths(&self) -> Option<Vec<f64>> {
        let codec = self.cfg.codec;
        self.truths.as_ref().map(|t| {
            t.iter()
                .map(|&v| codec.decode_i64(v, Scale::Weight))
                .collect()
        })
    }

    pub fn deviations(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let codec = self.cfg.codec;
        let dec = |v: &Vec<i64>| {
            v.iter()
                .map(|&x| codec.decode_i64(x, Scale::Weight))
                .collect()
        };
        Some((dec(self.mean.as_ref()?), dec(self.std.as_ref()?)))
    }

    /// `(r_{j1}, log(r_{j1}·sum_d))` of the latest weight round.
    pub fn last_blind(&self) -> Option<(u64, i64)> {
        self.round.as_ref().map(|r| (r.r1, r.q1))
    }

    /// Per-slot plaintext sums of a MAC-verified fog aggregate.
    pub fn recover(&mut self, agg: &FogAggregate) -> Result<Vec<BigInt>, ProtocolError> {
        let payload = agg.payload(self.params.element_bytes());
        if !check_fog_tag(
            &payload,
            agg.report as u64,
            &self.shared_key,
            &agg.tag,
            &self.ops,
        ) {
            return Err(ProtocolError::AggregateRejected);
        }
        let r = agg.report as usize;
        if agg.slots.len() != Phase::from_report_index(r).slots(self.cfg.objects) {
            return Err(ProtocolError::CorruptedReport);
        }
        match self.cfg.mode {
            Mode::Lptd1 => agg
                .slots
                .iter()
                .zip(&self.server_masks[r])
                .map(|(c, mask)| {
                    let ct = MaskedCiphertext {
                        c: c.clone(),
                        g_part: None,
                    };
                    unmask_decode(&self.params, &ct, mask, &self.ops)
                        .map(|p| p.0)
                        .map_err(|e| match e {
                            CryptoError::MaskMismatch => ProtocolError::MissingDevice,
                            other => other.into(),
                        })
                })
                .collect(),
            Mode::Lptd2 => {
                let g = agg.g_part.as_ref().ok_or(ProtocolError::CorruptedReport)?;
                let t = self.params.pow(g, &self.x2, &self.ops);
                let t_inv = self.params.inv(&t, &self.ops)?;
                let mut out = Vec::with_capacity(agg.slots.len());
                for (slot, c) in agg.slots.iter().enumerate() {
                    let mut v = self.params.mul(c, &t_inv, &self.ops);
                    if slot > 0 {
                        for &k in &agg.present {
                            let comp = self
                                .compensators
                                .get(k as usize)
                                .and_then(|d| d.get(r))
                                .ok_or(ProtocolError::CorruptedReport)?;
                            v = self.params.mul(&v, &comp[slot], &self.ops);
                        }
                    }
                    out.push(
                        self.params
                            .decode_element(&v)
                            .map_err(|_| ProtocolError::CorruptedReport)?,
                    );
                }
                Ok(out)
            }
        }
    }

    /// Std round A: caches `S_x` and broadcasts `x̄ = S_x / K`.
    pub fn on_std_mean(&mut self, agg: &FogAggregate) -> Result<RealBroadcast, ProtocolError> {
        let sums = self.recover(agg)?;
        let k = agg.present.len() as f64;
        let codec = self.cfg.codec;
        let mean = sums
            .iter()
            .map(|s| codec.encode_i64(to_f64(s) / codec.factor(Scale::Obs) / k, Scale::Weight))
            .collect::<Result<Vec<_>, _>>()?;
        self.obs_sums = alloc::vec![(agg.present.clone(), sums)];
        self.mean = Some(mean.clone());
        Ok(RealBroadcast {
            kind: RealKind::Mean,
            iteration: 0,
            values: mean,
        })
    }

    /// Std round B: `std = sqrt(Σ d / K)`, floored at one observation unit.
    pub fn on_std_dev(&mut self, agg: &FogAggregate) -> Result<RealBroadcast, ProtocolError> {
        let sums = self.recover(agg)?;
        let k = agg.present.len() as f64;
        let codec = self.cfg.codec;
        let floor = 1.0 / codec.factor(Scale::Obs);
        let std = sums
            .iter()
            .map(|s| {
                let var = to_f64(s) / codec.factor(Scale::ObsSquared) / k;
                codec.encode_i64(libm::sqrt(var).max(floor), Scale::Weight)
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.std = Some(std.clone());
        Ok(RealBroadcast {
            kind: RealKind::Std,
            iteration: 0,
            values: std,
        })
    }

    /// Starting truths. `Uniform` draws from `[x̄ - std, x̄ + std]`, the
    /// spread the cloud can see without per-device readings.
    pub fn initial_truths(&mut self, init: &TruthInit) -> Result<RealBroadcast, ProtocolError> {
        let (mean, std) = self.deviations().ok_or(ProtocolError::OutOfOrder(
            "truths before the std subprotocol",
        ))?;
        let values: Vec<f64> = match init {
            TruthInit::Mean => mean,
            TruthInit::Uniform => mean
                .iter()
                .zip(&std)
                .map(|(&mu, &s)| self.rng.random_range(mu - s..=mu + s))
                .collect(),
            TruthInit::Given(t) => {
                if t.objects() != self.cfg.objects {
                    return Err(ProtocolError::Config(
                        "initial truths do not match the objects",
                    ));
                }
                t.values().to_vec()
            }
        };
        self.broadcast_truths(&values, 0)
    }

    fn broadcast_truths(
        &mut self,
        values: &[f64],
        iteration: usize,
    ) -> Result<RealBroadcast, ProtocolError> {
        let codec = self.cfg.codec;
        let q = values
            .iter()
            .map(|&v| codec.encode_i64(v, Scale::Weight))
            .collect::<Result<Vec<_>, _>>()?;
        self.truths = Some(q.clone());
        Ok(RealBroadcast {
            kind: RealKind::Truths,
            iteration: iteration as u32,
            values: q,
        })
    }

    /// Recovers `sum_d` and broadcasts `log(r_{j1} · sum_d)`.
    pub fn on_weight_aggregate(
        &mut self,
        agg: &FogAggregate,
        iteration: usize,
    ) -> Result<BlindedSum, ProtocolError> {
        if agg.report as usize != Phase::Weight(iteration).report_index() {
            return Err(ProtocolError::OutOfOrder(
                "aggregate is not this iteration's weight round",
            ));
        }
        let sum_d = self.recover(agg)?.swap_remove(0);
        let codec = self.cfg.codec;
        let sum_real = to_f64(&sum_d) / codec.factor(Scale::Weight);
        if sum_real.is_nan() || sum_real <= 0.0 {
            return Err(ProtocolError::DegenerateWeights);
        }
        let (lo, hi) = self.cfg.blind_range;
        let r1 = self.rng.random_range(lo..=hi);
        let q1 = codec.encode_i64(libm::log(r1 as f64 * sum_real), Scale::Weight)?;
        self.round = Some(WeightRound {
            iteration,
            sum_d,
            r1,
            q1,
            debias: None,
        });
        Ok(BlindedSum {
            iteration: iteration as u32,
            value: q1,
        })
    }

    pub fn on_debias(&mut self, share: &DebiasShare) -> Result<(), ProtocolError> {
        match self.round.as_mut() {
            Some(r) if r.iteration == share.iteration as usize => {
                r.debias = Some(*share);
                Ok(())
            }
            _ => Err(ProtocolError::OutOfOrder(
                "debias share for an unknown iteration",
            )),
        }
    }

    /// Observation sums over a reduced device set, re-aggregated by the fog.
    pub fn on_observation_sum(&mut self, agg: &FogAggregate) -> Result<(), ProtocolError> {
        if agg.report as usize != Phase::StdMean.report_index() {
            return Err(ProtocolError::OutOfOrder(
                "observation sums must come from std round A",
            ));
        }
        let sums = self.recover(agg)?;
        self.obs_sums.truncate(1);
        self.obs_sums.push((agg.present.clone(), sums));
        Ok(())
    }

    fn obs_sum_for(&self, present: &[u32]) -> Result<&[BigInt], ProtocolError> {
        self.obs_sums
            .iter()
            .find(|(set, _)| set == present)
            .map(|(_, s)| s.as_slice())
            .ok_or(ProtocolError::MissingObservationSum)
    }

    /// Truth update. Debias mode removes the common shift
    /// `c = (q1 + q2)/T_wt - log(sum_d)` from every blinded weight:
    /// `x* = (A1 - c·S_x) / (A2 - K'·c)`.
    pub fn on_truth_aggregate(
        &mut self,
        agg: &FogAggregate,
        iteration: usize,
    ) -> Result<RealBroadcast, ProtocolError> {
        if agg.report as usize != Phase::Truth(iteration).report_index() {
            return Err(ProtocolError::OutOfOrder(
                "aggregate is not this iteration's truth round",
            ));
        }
        let mut sums = self.recover(agg)?;
        let a2 = sums.pop().expect("truth aggregate carries A2");
        let a1 = sums;
        let codec = self.cfg.codec;
        let t_obs = codec.factor(Scale::Obs);
        let t_wt = codec.factor(Scale::Weight);
        let t_ow = codec.factor(Scale::ObsWeight);
        let truths: Vec<f64> = match self.cfg.blinding {
            Blinding::Literal => {
                if a2.sign() != num_bigint::Sign::Plus {
                    return Err(ProtocolError::DegenerateWeights);
                }
                let a2 = to_f64(&a2) / t_wt;
                a1.iter().map(|a| to_f64(a) / t_ow / a2).collect()
            }
            Blinding::Debias => {
                let round = self
                    .round
                    .as_ref()
                    .filter(|r| r.iteration == iteration)
                    .ok_or(ProtocolError::OutOfOrder(
                        "truth round before the weight round",
                    ))?;
                let share = round.debias.ok_or(ProtocolError::OutOfOrder(
                    "truth round before the debias share",
                ))?;
                let sx = self.obs_sum_for(&agg.present)?;
                if agg.present.len() == 1 {
                    // A lone device has w = log(Dist/Dist) = 0; its readings are the answer.
                    sx.iter().map(|s| to_f64(s) / t_obs).collect()
                } else {
                    let sum_real = to_f64(&round.sum_d) / t_wt;
                    let c = (round.q1 + share.q2) as f64 / t_wt - libm::log(sum_real);
                    let k = agg.present.len() as f64;
                    let denom = to_f64(&a2) / t_wt - k * c;
                    if denom.is_nan() || denom <= 0.0 {
                        return Err(ProtocolError::DegenerateWeights);
                    }
                    a1.iter()
                        .zip(sx)
                        .map(|(a, s)| (to_f64(a) / t_ow - c * to_f64(s) / t_obs) / denom)
                        .collect()
                }
            }
        };
        self.broadcast_truths(&truths, iteration)
    }
}

fn to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
