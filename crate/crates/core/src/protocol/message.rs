//! Protocol messages and their canonical encoding.
//!
//! Ciphertext elements are written fixed-width, so the bits a message spends
//! on ciphertexts are exactly `elements · U`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::hashchain::{Digest, ReportTag};
use crate::wire::Encoder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Ta,
    Device(u32),
    Fog,
    Cloud,
    /// Broadcast to every device.
    Devices,
}

impl Party {
    fn tag(self) -> (u8, u32) {
        match self {
            Party::Ta => (0, 0),
            Party::Device(k) => (1, k),
            Party::Fog => (2, 0),
            Party::Cloud => (3, 0),
            Party::Devices => (4, 0),
        }
    }
}

/// One device report: `C_kj` (or the `W_kj` slots), the revealed chain
/// node, and the tag over the payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceReport {
    pub device: u32,
    pub report: u32,
    pub cts: Vec<BigUint>,
    /// LPTD-II companion `G_kj` (absent when pre-provisioned).
    pub g_part: Option<BigUint>,
    pub chain_node: Digest,
    pub tag: ReportTag,
}

impl DeviceReport {
    /// Bytes covered by the tag.
    pub fn payload(&self, width: usize) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u32(self.device)
            .u32(self.report)
            .u32(self.cts.len() as u32);
        for c in &self.cts {
            e.element(c, width);
        }
        match &self.g_part {
            Some(g) => e.u8(1).element(g, width),
            None => e.u8(0),
        };
        e.finish()
    }

    pub fn ciphertext_elements(&self) -> usize {
        self.cts.len() + usize::from(self.g_part.is_some())
    }

    fn encode_into(&self, e: &mut Encoder, width: usize) {
        e.bytes(&self.payload(width))
            .raw(&self.chain_node)
            .raw(&self.tag.0);
    }
}

/// Fog → cloud aggregate over the accepted reports `present`.
///
/// In LPTD-I `slots` are `∏ C_k · h^{s_fog}`. In LPTD-II they are
/// `∏ C_k / G^{x1}` and `g_part` carries `G = ∏ G_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FogAggregate {
    pub report: u32,
    pub present: Vec<u32>,
    pub slots: Vec<BigUint>,
    pub g_part: Option<BigUint>,
    pub tag: ReportTag,
}

impl FogAggregate {
    pub fn payload(&self, width: usize) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u32(self.report).u32(self.present.len() as u32);
        for &k in &self.present {
            e.u32(k);
        }
        e.u32(self.slots.len() as u32);
        for c in &self.slots {
            e.element(c, width);
        }
        match &self.g_part {
            Some(g) => e.u8(1).element(g, width),
            None => e.u8(0),
        };
        e.finish()
    }

    pub fn ciphertext_elements(&self) -> usize {
        self.slots.len() + usize::from(self.g_part.is_some())
    }
}

/// `log(r · sum_d)` as a fixed-point integer at the weight scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindedSum {
    pub iteration: u32,
    pub value: i64,
}

/// The fog's blind for iteration `j`, disclosed to the cloud in debias mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebiasShare {
    pub iteration: u32,
    pub r2: u64,
    /// `log(r2)` exactly as added to the broadcast.
    pub q2: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealKind {
    Mean,
    Std,
    Truths,
}

/// Per-object reals broadcast by the cloud, fixed-point at the weight scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealBroadcast {
    pub kind: RealKind,
    pub iteration: u32,
    pub values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    DeviceReport(DeviceReport),
    FogAggregate(FogAggregate),
    BlindedSum(BlindedSum),
    DebiasShare(DebiasShare),
    Broadcast(RealBroadcast),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub from: Party,
    pub to: Party,
    pub body: Body,
}

impl ProtocolMessage {
    pub fn new(from: Party, to: Party, body: Body) -> Self {
        Self { from, to, body }
    }

    pub fn encode(&self, width: usize) -> Vec<u8> {
        let mut e = Encoder::new();
        let (ft, fi) = self.from.tag();
        let (tt, ti) = self.to.tag();
        e.u8(ft).u32(fi).u8(tt).u32(ti);
        match &self.body {
            Body::DeviceReport(r) => {
                e.u8(1);
                r.encode_into(&mut e, width);
            }
            Body::FogAggregate(a) => {
                e.u8(2).bytes(&a.payload(width)).raw(&a.tag.0);
            }
            Body::BlindedSum(b) => {
                e.u8(3).u32(b.iteration).i64(b.value);
            }
            Body::DebiasShare(d) => {
                e.u8(4).u32(d.iteration).u64(d.r2).i64(d.q2);
            }
            Body::Broadcast(b) => {
                let kind = match b.kind {
                    RealKind::Mean => 0,
                    RealKind::Std => 1,
                    RealKind::Truths => 2,
                };
                e.u8(5).u8(kind).u32(b.iteration).u32(b.values.len() as u32);
                for &v in &b.values {
                    e.i64(v);
                }
            }
        }
        e.finish()
    }

    pub fn wire_bytes(&self, width: usize) -> usize {
        self.encode(width).len()
    }

    /// Number of `Z_{n²}` elements carried.
    pub fn ciphertext_elements(&self) -> usize {
        match &self.body {
            Body::DeviceReport(r) => r.ciphertext_elements(),
            Body::FogAggregate(a) => a.ciphertext_elements(),
            _ => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_size_is_fixed_width() {
        let width = 16;
        let report = |v: u32, g: bool| DeviceReport {
            device: 1,
            report: 2,
            cts: alloc::vec![BigUint::from(v), BigUint::from(1u32)],
            g_part: g.then(|| BigUint::from(3u32)),
            chain_node: [0; 32],
            tag: ReportTag([0; 32]),
        };
        let a = ProtocolMessage::new(
            Party::Device(1),
            Party::Fog,
            Body::DeviceReport(report(1, false)),
        );
        let b = ProtocolMessage::new(
            Party::Device(1),
            Party::Fog,
            Body::DeviceReport(report(u32::MAX, false)),
        );
        assert_eq!(a.wire_bytes(width), b.wire_bytes(width));
        let c = ProtocolMessage::new(
            Party::Device(1),
            Party::Fog,
            Body::DeviceReport(report(1, true)),
        );
        assert_eq!(c.wire_bytes(width) - a.wire_bytes(width), width);
        assert_eq!(c.ciphertext_elements(), 3);
    }
}
