//! Fog role: per-device chain verification, report filtering, aggregation,
//! the first half of split-key recovery, and re-blinding.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::cloud::Cloud;
use super::message::{BlindedSum, DebiasShare, DeviceReport, FogAggregate};
use super::setup::FogKeys;
use super::{Blinding, Mode, Phase, ProtocolConfig, ProtocolError};
use crate::crypto::{OpCounter, OpCounts, PlaintextAggregate, PublicParams, Scale};
use crate::hashchain::{check_device_tag, fog_tag, ChainVerifier, Digest, ReportTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    /// Report index is not the one the fog is collecting.
    WrongPhase,
    UnknownDevice,
    /// Wrong number of ciphertexts or a missing/unexpected companion.
    Malformed,
    /// Chain node does not hash back to the last accepted node.
    ChainCheck,
    /// Tag does not match the payload.
    TagMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub device: u32,
    pub report: u32,
    pub reason: RejectionReason,
}

pub struct Fog {
    cfg: ProtocolConfig,
    params: PublicParams,
    x1: BigUint,
    verifiers: Vec<ChainVerifier>,
    server_masks: Vec<Vec<BigUint>>,
    companions: Option<Vec<Vec<BigUint>>>,
    shared_key: Digest,
    collecting: Option<usize>,
    pending: BTreeMap<u32, DeviceReport>,
    /// Accepted std round-A reports, kept to re-sum observations over a
    /// reduced device set.
    std_mean_reports: BTreeMap<u32, DeviceReport>,
    rng: ChaCha20Rng,
    ops: OpCounter,
    recoveries: u64,
}

impl Fog {
    pub fn new(
        keys: FogKeys,
        cfg: &ProtocolConfig,
        params: PublicParams,
        rng: ChaCha20Rng,
    ) -> Self {
        let max_position = cfg.reports_per_device() as u64;
        Self {
            cfg: cfg.clone(),
            params,
            x1: keys.x1,
            verifiers: keys
                .heads
                .iter()
                .map(|h| ChainVerifier::new(*h, max_position))
                .collect(),
            server_masks: keys.server_masks,
            companions: keys.companions,
            shared_key: keys.shared_key,
            collecting: None,
            pending: BTreeMap::new(),
            std_mean_reports: BTreeMap::new(),
            rng,
            ops: OpCounter::new(),
            recoveries: 0,
        }
    }

    pub fn ops(&self) -> OpCounts {
        self.ops.snapshot()
    }

    /// Split-key strips performed (one per LPTD-II aggregate).
    pub fn recoveries(&self) -> u64 {
        self.recoveries
    }

    pub fn verifier(&self, device: usize) -> &ChainVerifier {
        &self.verifiers[device]
    }

    /// Starts collecting reports for `phase`, dropping anything pending.
    pub fn open_round(&mut self, phase: Phase) {
        self.collecting = Some(phase.report_index());
        self.pending.clear();
    }

    /// Checks phase, shape, chain node, then tag. The verifier only
    /// advances once every check has passed.
    pub fn receive(&mut self, report: &DeviceReport) -> Result<(), Rejection> {
        let reject = |reason| Rejection {
            device: report.device,
            report: report.report,
            reason,
        };
        let r = report.report as usize;
        if self.collecting != Some(r) {
            return Err(reject(RejectionReason::WrongPhase));
        }
        let k = report.device as usize;
        if k >= self.verifiers.len() {
            return Err(reject(RejectionReason::UnknownDevice));
        }
        let phase = Phase::from_report_index(r);
        let wants_g = self.cfg.mode == Mode::Lptd2 && self.companions.is_none();
        if report.cts.len() != phase.slots(self.cfg.objects) || report.g_part.is_some() != wants_g {
            return Err(reject(RejectionReason::Malformed));
        }
        let position = phase.chain_position();
        if !self.verifiers[k].check(&report.chain_node, position, &self.ops) {
            return Err(reject(RejectionReason::ChainCheck));
        }
        let payload = report.payload(self.params.element_bytes());
        if !check_device_tag(&payload, &report.chain_node, &report.tag, &self.ops) {
            return Err(reject(RejectionReason::TagMismatch));
        }
        self.verifiers[k].advance(report.chain_node, position);
        if phase == Phase::StdMean {
            self.std_mean_reports.insert(report.device, report.clone());
        }
        self.pending.insert(report.device, report.clone());
        Ok(())
    }

    /// Devices whose report for the open round was accepted.
    pub fn accepted(&self) -> Vec<u32> {
        self.pending.keys().copied().collect()
    }

    /// Aggregates the accepted reports.
    pub fn aggregate(&mut self) -> Result<FogAggregate, ProtocolError> {
        let r = self
            .collecting
            .ok_or(ProtocolError::OutOfOrder("no round open"))?;
        if self.pending.is_empty() {
            return Err(ProtocolError::EmptyAggregate);
        }
        let reports: Vec<DeviceReport> = self.pending.values().cloned().collect();
        self.combine(r, &reports)
    }

    /// Re-aggregates std round A over `present`, giving the cloud the
    /// observation sums it needs to debias a reduced round.
    pub fn observation_sum_for(&mut self, present: &[u32]) -> Result<FogAggregate, ProtocolError> {
        let reports = present
            .iter()
            .map(|k| {
                self.std_mean_reports
                    .get(k)
                    .cloned()
                    .ok_or(ProtocolError::MissingObservationSum)
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.combine(Phase::StdMean.report_index(), &reports)
    }

    fn companion<'a>(&'a self, report: &'a DeviceReport) -> Result<&'a BigUint, ProtocolError> {
        match (&report.g_part, &self.companions) {
            (Some(g), _) => Ok(g),
            (None, Some(all)) => Ok(&all[report.device as usize][report.report as usize]),
            (None, None) => Err(ProtocolError::CorruptedReport),
        }
    }

    /// Multiplies the reports slot-wise. LPTD-I folds in the fog's mask
    /// share; LPTD-II divides every slot by `G^{x1}` with `G = ∏ G_k`.
    pub fn combine(
        &mut self,
        r: usize,
        reports: &[DeviceReport],
    ) -> Result<FogAggregate, ProtocolError> {
        let slots = Phase::from_report_index(r).slots(self.cfg.objects);
        let mut acc = alloc::vec![BigUint::one(); slots];
        for rep in reports {
            if rep.cts.len() != slots || rep.report as usize != r {
                return Err(ProtocolError::CorruptedReport);
            }
            for (a, c) in acc.iter_mut().zip(&rep.cts) {
                *a = self.params.mul(a, c, &self.ops);
            }
        }
        let g_part = match self.cfg.mode {
            Mode::Lptd1 => {
                for (a, s) in acc.iter_mut().zip(&self.server_masks[r]) {
                    *a = self.params.mul(a, s, &self.ops);
                }
                None
            }
            Mode::Lptd2 => {
                let mut g = BigUint::one();
                for rep in reports {
                    g = self.params.mul(&g, self.companion(rep)?, &self.ops);
                }
                let t = self.params.pow(&g, &self.x1, &self.ops);
                let t_inv = self.params.inv(&t, &self.ops)?;
                for a in acc.iter_mut() {
                    *a = self.params.mul(a, &t_inv, &self.ops);
                }
                self.recoveries += 1;
                Some(g)
            }
        };
        let mut agg = FogAggregate {
            report: r as u32,
            present: reports.iter().map(|rep| rep.device).collect(),
            slots: acc,
            g_part,
            tag: ReportTag([0; 32]),
        };
        agg.tag = fog_tag(
            &agg.payload(self.params.element_bytes()),
            r as u64,
            &self.shared_key,
            &self.ops,
        );
        Ok(agg)
    }

    /// Adds `log(r_{j2})` to the cloud's broadcast. The returned
    /// share is only sent to the cloud in debias mode.
    pub fn reblind(
        &mut self,
        b: &BlindedSum,
    ) -> Result<(BlindedSum, Option<DebiasShare>), ProtocolError> {
        let (lo, hi) = self.cfg.blind_range;
        let r2 = self.rng.random_range(lo..=hi);
        let q2 = self
            .cfg
            .codec
            .encode_i64(libm::log(r2 as f64), Scale::Weight)?;
        let out = BlindedSum {
            iteration: b.iteration,
            value: b
                .value
                .checked_add(q2)
                .ok_or(ProtocolError::OutOfBound("blinded sum"))?,
        };
        let share = (self.cfg.blinding == Blinding::Debias).then_some(DebiasShare {
            iteration: b.iteration,
            r2,
            q2,
        });
        Ok((out, share))
    }
}

/// Fog and cloud halves of LPTD-II recovery over exactly `reports`:
/// `C_{t,1} = C / G^{x1}`, then `C_{t,2} = C_{t,1} / G^{x2}`.
///
/// An empty `reports` recovers zero in every slot.
pub fn lptd2_recover(
    fog: &mut Fog,
    cloud: &mut Cloud,
    reports: &[DeviceReport],
    report: usize,
) -> Result<Vec<PlaintextAggregate>, ProtocolError> {
    if fog.cfg.mode != Mode::Lptd2 {
        return Err(ProtocolError::Config("split-key recovery requires lptd2"));
    }
    let agg = fog.combine(report, reports)?;
    Ok(cloud
        .recover(&agg)?
        .into_iter()
        .map(PlaintextAggregate)
        .collect())
}
