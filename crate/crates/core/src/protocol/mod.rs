//! The four protocol roles as message-driven state machines.
//!
//! Every device sends `2 + 2w` authenticated reports over a run:
//!
//! | report index | phase                   | masked ciphertexts |
//! |--------------|-------------------------|--------------------|
//! | 0            | std round A (`x`)       | `M`                |
//! | 1            | std round B (`(x-x̄)²`)  | `M`                |
//! | 2j           | weight, iteration `j`   | 1                  |
//! | 2j + 1       | truth, iteration `j`    | `M + 1`            |
//!
//! Report `r` is authenticated with chain node `r + 1`, so chains hold
//! `2w + 2` revealable nodes.
//!
//! In LPTD-I each ciphertext slot of a report carries its own mask share and
//! the shares of all devices, the fog and the cloud cancel. In LPTD-II a
//! report carries one companion `G = g^σ`; slot `i` is masked with
//! `h^{σ + u_i}` (`u_0 = 0`) and the cloud holds `h^{-u_i}` for every device,
//! so a single split-key strip per aggregate recovers all slots of any
//! subset of devices.

pub mod cloud;
pub mod device;
pub mod fog;
pub mod message;
pub mod setup;

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::crypto::{CryptoError, FixedPointCodec};
use crate::truth::TruthError;

pub use cloud::Cloud;
pub use device::Device;
pub use fog::{lptd2_recover, Fog, Rejection, RejectionReason};
pub use message::{
    BlindedSum, Body, DebiasShare, DeviceReport, FogAggregate, Party, ProtocolMessage,
    RealBroadcast, RealKind,
};
pub use setup::{
    ta_setup, ta_setup_with_keys, CloudKeys, DeviceKeys, FogKeys, ReportMasks, SetupBundle,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Mask cancellation across all parties; every device must report.
    Lptd1,
    /// Split-key recovery over whichever devices reported.
    Lptd2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blinding {
    /// The fog discloses its blind to the cloud, which removes the additive
    /// weight shift before the truth update.
    Debias,
    /// Truth update `A1 / A2` with no correction.
    Literal,
}

/// Static parameters shared by every role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// `K`.
    pub devices: usize,
    /// `M`.
    pub objects: usize,
    /// `w`.
    pub iterations: usize,
    pub mode: Mode,
    pub blinding: Blinding,
    pub codec: FixedPointCodec,
    /// Largest `|x|` any device may report; drives the overflow guard.
    pub obs_bound: f64,
    /// Inclusive range the per-iteration blinds `r_{j1}`, `r_{j2}` are drawn from.
    pub blind_range: (u64, u64),
    /// Deliver LPTD-II companions to the fog at setup instead of in reports.
    pub preprovision_g: bool,
}

impl ProtocolConfig {
    pub fn reports_per_device(&self) -> usize {
        2 + 2 * self.iterations
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.devices == 0 {
            return Err(ProtocolError::Config("devices must be at least 1"));
        }
        if self.objects == 0 {
            return Err(ProtocolError::Config("objects must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(ProtocolError::Config("iterations must be at least 1"));
        }
        if !(self.obs_bound.is_finite() && self.obs_bound > 0.0) {
            return Err(ProtocolError::Config(
                "obs_bound must be positive and finite",
            ));
        }
        let (lo, hi) = self.blind_range;
        if lo == 0 || lo > hi {
            return Err(ProtocolError::Config(
                "blind_range must satisfy 1 <= lo <= hi",
            ));
        }
        if self.preprovision_g && self.mode == Mode::Lptd1 {
            return Err(ProtocolError::Config(
                "preprovision_g only applies to lptd2",
            ));
        }
        Ok(())
    }
}

/// Default blind range `[2, 2^16]`.
pub const DEFAULT_BLIND_RANGE: (u64, u64) = (2, 1 << 16);

/// Where a report sits in the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    StdMean,
    StdDev,
    Weight(usize),
    Truth(usize),
}

impl Phase {
    /// Position in the per-device report sequence (iterations are 1-based).
    pub fn report_index(self) -> usize {
        match self {
            Phase::StdMean => 0,
            Phase::StdDev => 1,
            Phase::Weight(j) => 2 * j,
            Phase::Truth(j) => 2 * j + 1,
        }
    }

    pub fn from_report_index(r: usize) -> Self {
        match r {
            0 => Phase::StdMean,
            1 => Phase::StdDev,
            r if r % 2 == 0 => Phase::Weight(r / 2),
            r => Phase::Truth(r / 2),
        }
    }

    /// Masked ciphertexts per report for `objects` objects.
    pub fn slots(self, objects: usize) -> usize {
        match self {
            Phase::StdMean | Phase::StdDev => objects,
            Phase::Weight(_) => 1,
            Phase::Truth(_) => objects + 1,
        }
    }

    /// Chain position authenticating this report.
    pub fn chain_position(self) -> u64 {
        self.report_index() as u64 + 1
    }

    pub fn iteration(self) -> Option<usize> {
        match self {
            Phase::Weight(j) | Phase::Truth(j) => Some(j),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Phase::StdMean => "std_mean",
            Phase::StdDev => "std_dev",
            Phase::Weight(_) => "weight",
            Phase::Truth(_) => "truth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("configuration error: {0}")]
    Config(&'static str),
    #[error("overflow guard: {0}")]
    Overflow(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Truth(#[from] TruthError),
    #[error("device {device}: mask or chain budget exhausted for report {report}")]
    BudgetExhausted { device: usize, report: usize },
    #[error("aggregate does not decode: a device report is missing or extra")]
    MissingDevice,
    #[error("aggregate does not decode after split-key recovery (corrupted report)")]
    CorruptedReport,
    #[error("aggregate tag from the fog does not verify")]
    AggregateRejected,
    #[error("no report was accepted for this round")]
    EmptyAggregate,
    #[error("weights sum to a non-positive value")]
    DegenerateWeights,
    #[error("message out of order: {0}")]
    OutOfOrder(&'static str),
    #[error("observation sums for the present device set are not available")]
    MissingObservationSum,
    #[error("value outside the configured bound: {0}")]
    OutOfBound(&'static str),
}
