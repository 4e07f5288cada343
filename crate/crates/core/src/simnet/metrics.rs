//! Run metrics and the per-device uplink accounting check.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::crypto::OpCounts;
use crate::protocol::{Mode, RejectionReason};

/// Bytes and ciphertext bits moved between two kinds of entity in one phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficRow {
    pub phase: String,
    pub from: String,
    pub to: String,
    pub messages: u64,
    pub bytes: u64,
    pub ciphertext_bits: u64,
}

/// One honest device report as sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkRecord {
    pub device: u32,
    pub report: u32,
    /// 0 for the std rounds.
    pub iteration: u32,
    pub ciphertext_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub device: u32,
    pub report: u32,
    pub iteration: u32,
    pub phase: String,
    pub reason: RejectionReason,
    /// Whether the rejected report came from the adversary.
    pub malicious: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityOps {
    pub ta: OpCounts,
    /// Summed over every device.
    pub devices: OpCounts,
    pub fog: OpCounts,
    pub cloud: OpCounts,
}

impl EntityOps {
    /// Operations spent after setup.
    pub fn runtime(&self) -> OpCounts {
        self.devices + self.fog + self.cloud
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Devices whose weight report the fog accepted.
    pub weight_present: Vec<u32>,
    /// Devices whose truth report the fog accepted.
    pub truth_present: Vec<u32>,
    pub truths: Vec<f64>,
    /// `w̃_k` per device as computed on the device (`None` when absent).
    pub blinded_weights: Vec<Option<f64>>,
    pub oracle_truths: Option<Vec<f64>>,
    pub oracle_weights: Option<Vec<f64>>,
    /// `max_m |x*_m - oracle_m|`.
    pub max_deviation: Option<f64>,
    pub rmse_vs_oracle: Option<f64>,
    pub rmse_vs_planted: Option<f64>,
    pub max_device_exps: u64,
    pub max_device_muls: u64,
    /// Cumulative uplink bytes of every party at the end of the iteration.
    pub bytes_so_far: u64,
    pub rejections: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub mode: Mode,
    pub devices: u32,
    pub objects: u32,
    pub kappa: u32,
    /// `U = bit-length(n²)`.
    pub ciphertext_bits: u64,
    pub preprovision_g: bool,
    pub completed: bool,
    pub error: Option<String>,
    pub iterations: Vec<IterationRecord>,
    pub traffic: Vec<TrafficRow>,
    pub uplink: Vec<UplinkRecord>,
    /// Companions delivered to the fog ahead of time.
    pub preprovisioned_bits: u64,
    pub ops: EntityOps,
    /// `(devices + fog + cloud)` priced in modular multiplications.
    pub runtime_mul_equivalents: u64,
    /// Split-key recoveries at the fog.
    pub recoveries: u64,
    pub rejections: Vec<RejectionRecord>,
    /// Messages that broke the aggregate-only schema (see `violates_privacy`).
    pub privacy_violations: u64,
    /// Honest reports whose chain node was not the next one in sequence.
    pub out_of_order_disclosures: u64,
    /// Last accepted chain position per device at the end of the run.
    pub verifier_positions: Vec<u64>,
    pub honest_sent: u64,
    pub honest_rejected: u64,
    pub malicious_sent: u64,
    pub malicious_rejected: u64,
    pub planted_truths: Option<Vec<f64>>,
    pub final_truths: Option<Vec<f64>>,
    pub rmse_vs_oracle: Option<f64>,
    pub rmse_vs_planted: Option<f64>,
    /// Fixed-point quantum of the observations.
    pub obs_quantum: f64,
}

impl RunMetrics {
    /// Oracle tolerance: ten observation quanta.
    pub fn tolerance(&self) -> f64 {
        10.0 * self.obs_quantum
    }

    /// Largest per-iteration deviation from the oracle.
    pub fn max_deviation(&self) -> Option<f64> {
        self.iterations
            .iter()
            .map(|i| i.max_deviation)
            .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
    }

    /// Completed, and within `tol` of the oracle at every iteration.
    pub fn matches_oracle(&self, tol: f64) -> bool {
        self.completed
            && !self.iterations.is_empty()
            && self.max_deviation().is_some_and(|d| d <= tol)
    }

    pub fn total_bytes(&self) -> u64 {
        self.traffic.iter().map(|r| r.bytes).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountPhase {
    Weight,
    Truth,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error(
    "device {device} report {report}: sent {actual} ciphertext bits, closed form gives {expected}"
)]
pub struct AccountingError {
    pub device: u32,
    pub report: u32,
    pub expected: u64,
    pub actual: u64,
}

/// Closed-form per-device uplink for one report of `phase`.
pub fn expected_uplink_bits(
    mode: Mode,
    preprovisioned: bool,
    objects: u64,
    u: u64,
    phase: AccountPhase,
) -> u64 {
    let companion = u64::from(mode == Mode::Lptd2 && !preprovisioned);
    match phase {
        AccountPhase::Weight => (1 + companion) * u,
        AccountPhase::Truth => (objects + 1 + companion) * u,
    }
}

/// Checks every honest report of `phase` against the closed form and
/// returns how many were checked.
pub fn account_bytes(metrics: &RunMetrics, phase: AccountPhase) -> Result<usize, AccountingError> {
    let expected = expected_uplink_bits(
        metrics.mode,
        metrics.preprovision_g,
        metrics.objects as u64,
        metrics.ciphertext_bits,
        phase,
    );
    let mut checked = 0;
    for rec in &metrics.uplink {
        let is_phase = match phase {
            AccountPhase::Weight => rec.report >= 2 && rec.report % 2 == 0,
            AccountPhase::Truth => rec.report >= 2 && rec.report % 2 == 1,
        };
        if !is_phase {
            continue;
        }
        if rec.ciphertext_bits != expected {
            return Err(AccountingError {
                device: rec.device,
                report: rec.report,
                expected,
                actual: rec.ciphertext_bits,
            });
        }
        checked += 1;
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let u = 2048;
        assert_eq!(
            expected_uplink_bits(Mode::Lptd1, false, 100, u, AccountPhase::Weight),
            2048
        );
        assert_eq!(
            expected_uplink_bits(Mode::Lptd2, false, 100, u, AccountPhase::Truth),
            102 * u
        );
        assert_eq!(
            expected_uplink_bits(Mode::Lptd1, false, 0, u, AccountPhase::Truth),
            u
        );
        assert_eq!(
            expected_uplink_bits(Mode::Lptd2, true, 100, u, AccountPhase::Truth),
            101 * u
        );
        assert_eq!(
            expected_uplink_bits(Mode::Lptd2, true, 7, u, AccountPhase::Weight),
            u
        );
    }
}
