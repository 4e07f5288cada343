//! External attacker acting on the bus between devices and the fog.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::config::{AttackKind, AttackPhase, AttackSpec};
use crate::crypto::arith::random_below;
use crate::crypto::{OpCounter, PublicParams};
use crate::hashchain::{device_tag, ReportTag, DIGEST_LEN};
use crate::protocol::{DeviceReport, Phase};

/// A report to put on the bus, honest or forged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub report: DeviceReport,
    pub malicious: bool,
}

pub struct Adversary {
    attacks: Vec<AttackSpec>,
    params: PublicParams,
    objects: usize,
    /// Whether reports carry an inline companion.
    companion: bool,
    rng: ChaCha20Rng,
    /// Every honest report seen on the bus, per device, in order.
    seen: BTreeMap<u32, Vec<DeviceReport>>,
    ops: OpCounter,
}

impl Adversary {
    pub fn new(
        attacks: Vec<AttackSpec>,
        params: PublicParams,
        objects: usize,
        companion: bool,
        rng: ChaCha20Rng,
    ) -> Self {
        Self {
            attacks,
            params,
            objects,
            companion,
            rng,
            seen: BTreeMap::new(),
            ops: OpCounter::disabled(),
        }
    }

    fn active(&self, device: usize, phase: Phase) -> Vec<AttackSpec> {
        let (kind, j) = match phase {
            Phase::Weight(j) => (AttackPhase::Weight, j),
            Phase::Truth(j) => (AttackPhase::Truth, j),
            _ => return Vec::new(),
        };
        self.attacks
            .iter()
            .filter(|a| a.device == device && a.iteration == j && a.phase == kind)
            .copied()
            .collect()
    }

    /// What reaches the fog for `device` in `phase`, given the device's own
    /// report (absent when the device is silent).
    ///
    /// Tampered copies race ahead of the honest report; replays and
    /// injections follow it.
    pub fn intercept(
        &mut self,
        device: usize,
        phase: Phase,
        honest: Option<DeviceReport>,
    ) -> Vec<Delivery> {
        let attacks = self.active(device, phase);
        let mut before = Vec::new();
        let mut after = Vec::new();
        let mut suppress = false;
        for a in &attacks {
            suppress |= a.suppress_original;
            let forged = match a.kind {
                AttackKind::Tamper => honest.as_ref().map(|h| self.tamper(h)),
                AttackKind::Replay => self.replay(device, phase),
                AttackKind::Inject => Some(self.inject(device, phase)),
            };
            if let Some(report) = forged {
                let d = Delivery {
                    report,
                    malicious: true,
                };
                match a.kind {
                    AttackKind::Tamper => before.push(d),
                    _ => after.push(d),
                }
            }
        }
        let mut out = before;
        if let Some(h) = honest {
            self.seen.entry(h.device).or_default().push(h.clone());
            if !suppress {
                out.push(Delivery {
                    report: h,
                    malicious: false,
                });
            }
        }
        out.extend(after);
        out
    }

    /// Flips one ciphertext bit and keeps the original tag.
    fn tamper(&mut self, honest: &DeviceReport) -> DeviceReport {
        let mut r = honest.clone();
        let top = self.params.ciphertext_bits() - 1;
        let bit = self.rng.random_range(0..top);
        let c = &mut r.cts[0];
        c.set_bit(bit, !c.bit(bit));
        r
    }

    /// The device's latest earlier report with the right slot count (or
    /// simply the latest), relabelled for `phase` and re-tagged with its
    /// already disclosed chain node.
    fn replay(&mut self, device: usize, phase: Phase) -> Option<DeviceReport> {
        let history = self.seen.get(&(device as u32))?;
        let slots = phase.slots(self.objects);
        let old = history
            .iter()
            .rev()
            .find(|r| r.cts.len() == slots)
            .or_else(|| history.last())?;
        let mut r = old.clone();
        r.report = phase.report_index() as u32;
        r.tag = device_tag(
            &r.payload(self.params.element_bytes()),
            &r.chain_node,
            &self.ops,
        );
        Some(r)
    }

    /// Random ciphertexts under a random chain node with a consistent tag.
    fn inject(&mut self, device: usize, phase: Phase) -> DeviceReport {
        let n_sq = self.params.n_sq().clone();
        let slots = phase.slots(self.objects);
        let cts = (0..slots)
            .map(|_| random_below(&mut self.rng, &n_sq))
            .collect();
        let g_part = self.companion.then(|| random_below(&mut self.rng, &n_sq));
        let mut node = [0u8; DIGEST_LEN];
        self.rng.fill(&mut node);
        let mut r = DeviceReport {
            device: device as u32,
            report: phase.report_index() as u32,
            cts,
            g_part,
            chain_node: node,
            tag: ReportTag([0; DIGEST_LEN]),
        };
        r.tag = device_tag(&r.payload(self.params.element_bytes()), &node, &self.ops);
        r
    }
}
