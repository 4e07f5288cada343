//! One-way hash chains for per-report device authentication, and the
//! hash-based tags on device and fog reports.
//!
//! A chain of length `w` is `h_0 .. h_w` with `h_w` the random seed and
//! `h_j = H(h_{j+1} || j)`. The fog holds `h_0`; the device reveals
//! `h_1, h_2, …` in order, one per report.
//!
//! Note that a device tag `H(payload || h_j)` is keyed with a value that
//! travels in the same message: it only binds the payload to a fresh chain
//! node. It is not a MAC against an on-path attacker who rewrites both.

use alloc::vec::Vec;

use sha2::{Digest as _, Sha256};

use crate::crypto::OpCounter;
use crate::wire::Encoder;

/// Output length `l` of the configured hash, in bytes.
pub const DIGEST_LEN: usize = 32;

pub type Digest = [u8; DIGEST_LEN];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("hash chain length must be at least 1")]
    InvalidLength,
}

fn sha256(bytes: &[u8], ops: &OpCounter) -> Digest {
    ops.hash();
    Sha256::digest(bytes).into()
}

/// `H(value || index)` with `value` length-prefixed and `index` as 8-byte BE.
pub fn chain_hash(value: &Digest, index: u64, ops: &OpCounter) -> Digest {
    let mut e = Encoder::new();
    e.bytes(value).u64(index);
    sha256(&e.finish(), ops)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashChain {
    nodes: Vec<Digest>,
}

impl HashChain {
    pub fn generate(seed: Digest, w: usize) -> Result<Self, ChainError> {
        if w == 0 {
            return Err(ChainError::InvalidLength);
        }
        let ops = OpCounter::disabled();
        let mut nodes = alloc::vec![[0u8; DIGEST_LEN]; w + 1];
        nodes[w] = seed;
        for j in (0..w).rev() {
            nodes[j] = chain_hash(&nodes[j + 1], j as u64, &ops);
        }
        Ok(Self { nodes })
    }

    /// Number of revealable nodes `w` (the head `h_0` is not revealed).
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn head(&self) -> &Digest {
        &self.nodes[0]
    }

    pub fn node(&self, j: usize) -> Option<&Digest> {
        self.nodes.get(j)
    }

    pub fn nodes(&self) -> &[Digest] {
        &self.nodes
    }
}

/// Fog-side verifier for one device's chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainVerifier {
    last_accepted: Digest,
    last_position: u64,
    max_position: u64,
}

impl ChainVerifier {
    /// Starts from the head `h_0`; positions above `max_position` are refused.
    pub fn new(head: Digest, max_position: u64) -> Self {
        Self {
            last_accepted: head,
            last_position: 0,
            max_position,
        }
    }

    pub fn last_position(&self) -> u64 {
        self.last_position
    }

    pub fn last_accepted(&self) -> &Digest {
        &self.last_accepted
    }

    /// Whether `candidate` is the chain node at `position`, without advancing.
    ///
    /// Positions skipped by a silent device are bridged by hashing forward
    /// from the candidate; anything at or below the last accepted position is
    /// refused.
    pub fn check(&self, candidate: &Digest, position: u64, ops: &OpCounter) -> bool {
        if position <= self.last_position || position > self.max_position {
            return false;
        }
        let mut v = *candidate;
        for idx in (self.last_position..position).rev() {
            v = chain_hash(&v, idx, ops);
        }
        v == self.last_accepted
    }

    /// Commits a node previously approved by [`Self::check`].
    pub fn advance(&mut self, candidate: Digest, position: u64) {
        debug_assert!(position > self.last_position);
        self.last_accepted = candidate;
        self.last_position = position;
    }

    /// Check-and-advance in one step.
    pub fn verify_step(&mut self, candidate: &Digest, position: u64, ops: &OpCounter) -> bool {
        let ok = self.check(candidate, position, ops);
        if ok {
            self.advance(*candidate, position);
        }
        ok
    }
}

/// Hash tag over a report payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportTag(pub Digest);

/// Device form `H(payload || h_j)`.
pub fn device_tag(payload: &[u8], chain_node: &Digest, ops: &OpCounter) -> ReportTag {
    let mut e = Encoder::new();
    e.bytes(payload).bytes(chain_node);
    ReportTag(sha256(&e.finish(), ops))
}

/// Fog form `H(payload || j || ss)`.
pub fn fog_tag(payload: &[u8], j: u64, shared_key: &Digest, ops: &OpCounter) -> ReportTag {
    let mut e = Encoder::new();
    e.bytes(payload).u64(j).bytes(shared_key);
    ReportTag(sha256(&e.finish(), ops))
}

pub fn check_device_tag(
    payload: &[u8],
    chain_node: &Digest,
    tag: &ReportTag,
    ops: &OpCounter,
) -> bool {
    device_tag(payload, chain_node, ops) == *tag
}

pub fn check_fog_tag(
    payload: &[u8],
    j: u64,
    shared_key: &Digest,
    tag: &ReportTag,
    ops: &OpCounter,
) -> bool {
    fog_tag(payload, j, shared_key, ops) == *tag
}
