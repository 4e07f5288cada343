//! In-process FIFO message bus with traffic accounting.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use crate::protocol::{Body, Party, ProtocolMessage};

use super::metrics::{TrafficRow, UplinkRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub seq: u64,
    pub msg: ProtocolMessage,
    pub malicious: bool,
}

fn entity(p: Party) -> &'static str {
    match p {
        Party::Ta => "ta",
        Party::Device(_) => "device",
        Party::Fog => "fog",
        Party::Cloud => "cloud",
        Party::Devices => "devices",
    }
}

/// Delivers in send order, which is also FIFO per (sender, receiver).
pub struct Bus {
    width: usize,
    element_bits: u64,
    queue: VecDeque<Envelope>,
    next_seq: u64,
    phase: &'static str,
    iteration: u32,
    traffic: BTreeMap<(&'static str, &'static str, &'static str), TrafficRow>,
    uplink: Vec<UplinkRecord>,
    privacy_violations: u64,
}

/// Whether `msg` would show a server something finer than an aggregate.
///
/// The fog may only see ciphertext reports and blinded sums; the cloud only
/// aggregates over at least two devices, blinded sums and debias shares.
pub fn violates_privacy(msg: &ProtocolMessage) -> bool {
    match (msg.to, &msg.body) {
        (Party::Fog, Body::DeviceReport(_) | Body::BlindedSum(_)) => false,
        (Party::Cloud, Body::FogAggregate(a)) => a.present.len() < 2,
        (Party::Cloud, Body::DebiasShare(_)) => false,
        (Party::Devices | Party::Device(_), Body::Broadcast(_) | Body::BlindedSum(_)) => false,
        _ => true,
    }
}

impl Bus {
    /// `width` is the fixed byte width of a ciphertext element and
    /// `element_bits` its accounted size `U`.
    pub fn new(width: usize, element_bits: u64) -> Self {
        Self {
            width,
            element_bits,
            queue: VecDeque::new(),
            next_seq: 0,
            phase: "setup",
            iteration: 0,
            traffic: BTreeMap::new(),
            uplink: Vec::new(),
            privacy_violations: 0,
        }
    }

    /// Label under which subsequent traffic is accounted.
    pub fn set_phase(&mut self, phase: &'static str, iteration: u32) {
        self.phase = phase;
        self.iteration = iteration;
    }

    pub fn send(&mut self, msg: ProtocolMessage, malicious: bool) {
        let bytes = msg.wire_bytes(self.width) as u64;
        let bits = msg.ciphertext_elements() as u64 * self.element_bits;
        if violates_privacy(&msg) {
            self.privacy_violations += 1;
        }
        let key = (self.phase, entity(msg.from), entity(msg.to));
        let row = self.traffic.entry(key).or_insert_with(|| TrafficRow {
            phase: String::from(key.0),
            from: String::from(key.1),
            to: String::from(key.2),
            messages: 0,
            bytes: 0,
            ciphertext_bits: 0,
        });
        row.messages += 1;
        row.bytes += bytes;
        row.ciphertext_bits += bits;
        if let (false, Body::DeviceReport(r)) = (malicious, &msg.body) {
            self.uplink.push(UplinkRecord {
                device: r.device,
                report: r.report,
                iteration: self.iteration,
                ciphertext_bits: bits,
            });
        }
        self.queue.push_back(Envelope {
            seq: self.next_seq,
            msg,
            malicious,
        });
        self.next_seq += 1;
    }

    pub fn pop(&mut self) -> Option<Envelope> {
        self.queue.pop_front()
    }

    pub fn drain(&mut self) -> Vec<Envelope> {
        self.queue.drain(..).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.traffic.values().map(|r| r.bytes).sum()
    }

    pub fn privacy_violations(&self) -> u64 {
        self.privacy_violations
    }

    pub fn into_parts(self) -> (Vec<TrafficRow>, Vec<UplinkRecord>) {
        (self.traffic.into_values().collect(), self.uplink)
    }
}
