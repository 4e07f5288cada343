//! Truth discovery over masked Paillier aggregates with fog and cloud servers.
//!
//! The crate is `no_std` (with `alloc`). It contains the cryptographic
//! primitives, the hash-chain authenticator, the plaintext truth-discovery
//! oracle, the per-role protocol state machines and an in-memory simulator
//! that wires them together.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod crypto;
pub mod hashchain;
pub mod protocol;
pub mod simnet;
pub mod truth;
pub mod wire;
