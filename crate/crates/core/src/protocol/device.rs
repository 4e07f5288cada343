//! IoT device role. Devices only multiply: every exponentiation they need
//! was done by the TA.

use alloc::vec::Vec;

use num_bigint::BigInt;

use super::message::{BlindedSum, DeviceReport, RealBroadcast, RealKind};
use super::setup::{DeviceKeys, ReportMasks};
use super::{Phase, ProtocolConfig, ProtocolError};
use crate::crypto::{mask_encrypt, OpCounter, OpCounts, PublicParams, Scale};
use crate::hashchain::{device_tag, HashChain};

pub struct Device {
    id: usize,
    cfg: ProtocolConfig,
    params: PublicParams,
    /// Readings at the observation scale.
    obs: Vec<i64>,
    masks: Vec<Option<ReportMasks>>,
    chain: HashChain,
    last_report: Option<usize>,
    mean: Option<Vec<i64>>,
    std: Option<Vec<i64>>,
    truths: Option<Vec<i64>>,
    /// `(iteration, Dist_k)` at the weight scale.
    dist: Option<(usize, i64)>,
    /// `(iteration, w̃_k)` at the weight scale.
    blinded_weight: Option<(usize, i64)>,
    ops: OpCounter,
}

impl Device {
    pub fn new(
        keys: DeviceKeys,
        cfg: &ProtocolConfig,
        observations: &[f64],
    ) -> Result<Self, ProtocolError> {
        if observations.len() != cfg.objects {
            return Err(ProtocolError::Config("one observation per object"));
        }
        let mut obs = Vec::with_capacity(observations.len());
        for &x in observations {
            if x.is_nan() || libm::fabs(x) > cfg.obs_bound {
                return Err(ProtocolError::OutOfBound("observation exceeds obs_bound"));
            }
            obs.push(cfg.codec.encode_i64(x, Scale::Obs)?);
        }
        Ok(Self {
            id: keys.id,
            cfg: cfg.clone(),
            params: keys.params,
            obs,
            masks: keys.masks.into_iter().map(Some).collect(),
            chain: keys.chain,
            last_report: None,
            mean: None,
            std: None,
            truths: None,
            dist: None,
            blinded_weight: None,
            ops: OpCounter::new(),
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn ops(&self) -> OpCounts {
        self.ops.snapshot()
    }

    /// Quantized readings as reals.
    pub fn observations(&self) -> Vec<f64> {
        self.obs
            .iter()
            .map(|&v| self.cfg.codec.decode_i64(v, Scale::Obs))
            .collect()
    }

    /// Latest `Dist_k` at the weight scale.
    pub fn distance(&self) -> Option<i64> {
        self.dist.map(|(_, d)| d)
    }

    /// Latest blinded weight `w̃_k` at the weight scale.
    pub fn blinded_weight(&self) -> Option<i64> {
        self.blinded_weight.map(|(_, w)| w)
    }

    /// Masks, tags and authenticates `plaintexts` as report `phase`,
    /// consuming that report's mask material and chain node.
    pub fn masked_report(
        &mut self,
        phase: Phase,
        plaintexts: &[BigInt],
    ) -> Result<DeviceReport, ProtocolError> {
        let r = phase.report_index();
        let exhausted = ProtocolError::BudgetExhausted {
            device: self.id,
            report: r,
        };
        if self.last_report.is_some_and(|last| r <= last) {
            return Err(exhausted);
        }
        let masks = self
            .masks
            .get_mut(r)
            .and_then(Option::take)
            .ok_or(exhausted.clone())?;
        if masks.h.len() != plaintexts.len() {
            return Err(ProtocolError::Config(
                "plaintext count does not match the report's slots",
            ));
        }
        let node = *self.chain.node(r + 1).ok_or(exhausted)?;
        let mut cts = Vec::with_capacity(plaintexts.len());
        for (m, h) in plaintexts.iter().zip(&masks.h) {
            cts.push(mask_encrypt(&self.params, m, h, &self.ops)?.c);
        }
        let mut report = DeviceReport {
            device: self.id as u32,
            report: r as u32,
            cts,
            g_part: masks.g,
            chain_node: node,
            tag: crate::hashchain::ReportTag([0; 32]),
        };
        report.tag = device_tag(
            &report.payload(self.params.element_bytes()),
            &node,
            &self.ops,
        );
        self.last_report = Some(r);
        Ok(report)
    }

    /// Std round A: `Enc(x^k_m)` per object.
    pub fn std_mean_report(&mut self) -> Result<DeviceReport, ProtocolError> {
        let pts: Vec<BigInt> = self.obs.iter().map(|&v| BigInt::from(v)).collect();
        self.masked_report(Phase::StdMean, &pts)
    }

    /// Std round B: `Enc((x^k_m - x̄_m)²)` per object.
    pub fn std_dev_report(&mut self) -> Result<DeviceReport, ProtocolError> {
        let mean = self.mean.as_ref().ok_or(ProtocolError::OutOfOrder(
            "std report before the mean broadcast",
        ))?;
        let codec = self.cfg.codec;
        let mut pts = Vec::with_capacity(self.obs.len());
        for (&x, &mu) in self.obs.iter().zip(mean) {
            let d = codec.decode_i64(x, Scale::Obs) - codec.decode_i64(mu, Scale::Weight);
            pts.push(codec.encode(d * d, Scale::ObsSquared)?);
        }
        self.masked_report(Phase::StdDev, &pts)
    }

    pub fn on_broadcast(&mut self, b: &RealBroadcast) -> Result<(), ProtocolError> {
        if b.values.len() != self.cfg.objects {
            return Err(ProtocolError::Config(
                "broadcast length does not match the objects",
            ));
        }
        let slot = match b.kind {
            RealKind::Mean => &mut self.mean,
            RealKind::Std => &mut self.std,
            RealKind::Truths => &mut self.truths,
        };
        *slot = Some(b.values.clone());
        Ok(())
    }

    /// `Dist_k` under the current truths, floored at one unit.
    pub fn weight_report(&mut self, iteration: usize) -> Result<DeviceReport, ProtocolError> {
        let std = self.std.as_ref().ok_or(ProtocolError::OutOfOrder(
            "weight report before the std broadcast",
        ))?;
        let truths = self
            .truths
            .as_ref()
            .ok_or(ProtocolError::OutOfOrder("weight report before any truths"))?;
        let codec = self.cfg.codec;
        let mut total = 0.0;
        for ((&x, &t), &s) in self.obs.iter().zip(truths).zip(std) {
            let d = codec.decode_i64(x, Scale::Obs) - codec.decode_i64(t, Scale::Weight);
            total += d * d / codec.decode_i64(s, Scale::Weight);
        }
        let dist = codec.encode_i64(total, Scale::Weight)?.max(1);
        let report = self.masked_report(Phase::Weight(iteration), &[BigInt::from(dist)])?;
        self.dist = Some((iteration, dist));
        Ok(report)
    }

    /// Blinded weight `w̃_k = log(r_j·sum_d) - log(Dist_k)`.
    pub fn on_blinded_sum(&mut self, b: &BlindedSum) -> Result<i64, ProtocolError> {
        let iteration = b.iteration as usize;
        let dist = match self.dist {
            Some((j, d)) if j == iteration => d,
            _ => {
                return Err(ProtocolError::OutOfOrder(
                    "blinded sum without a distance for this iteration",
                ))
            }
        };
        let codec = self.cfg.codec;
        let log_dist = codec.encode_i64(
            libm::log(codec.decode_i64(dist, Scale::Weight)),
            Scale::Weight,
        )?;
        let w = b
            .value
            .checked_sub(log_dist)
            .ok_or(ProtocolError::OutOfBound("blinded weight"))?;
        self.blinded_weight = Some((iteration, w));
        Ok(w)
    }

    /// `x^k_m · w̃_k` per object, then `w̃_k`.
    pub fn truth_report(&mut self, iteration: usize) -> Result<DeviceReport, ProtocolError> {
        let w = match self.blinded_weight {
            Some((j, w)) if j == iteration => w,
            _ => {
                return Err(ProtocolError::OutOfOrder(
                    "truth report without a weight for this iteration",
                ))
            }
        };
        let w = BigInt::from(w);
        let mut pts: Vec<BigInt> = self.obs.iter().map(|&x| BigInt::from(x) * &w).collect();
        pts.push(w);
        self.masked_report(Phase::Truth(iteration), &pts)
    }
}
