//! Scenario description and validation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::crypto::{FixedPointCodec, MAX_KAPPA, MIN_KAPPA};
use crate::protocol::{Blinding, Mode, ProtocolConfig, DEFAULT_BLIND_RANGE};

fn default_iterations() -> usize {
    crate::truth::DEFAULT_ITERATIONS
}

fn default_blinding() -> Blinding {
    Blinding::Debias
}

fn default_blind_range() -> [u64; 2] {
    [DEFAULT_BLIND_RANGE.0, DEFAULT_BLIND_RANGE.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub devices: usize,
    pub objects: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    pub kappa: u32,
    pub mode: Mode,
    #[serde(default = "default_blinding")]
    pub blinding: Blinding,
    /// Required to run; front ends may fill it from elsewhere.
    #[serde(default)]
    pub seed: Option<u64>,
    pub data: DataModel,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default)]
    pub codec: FixedPointCodec,
    #[serde(default = "default_blind_range")]
    pub blind_range: [u64; 2],
    #[serde(default)]
    pub preprovision_g: bool,
    #[serde(default)]
    pub truth_init: InitMode,
    /// Decimal safe primes to use instead of generating keys.
    #[serde(default)]
    pub primes: Option<PinnedPrimes>,
    /// Largest `|x|` devices may report; defaults to the largest reading.
    #[serde(default)]
    pub obs_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedPrimes {
    pub p: String,
    pub q: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Uniform,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataModel {
    /// Truths uniform in `truth_range`; device `k` adds gaussian noise with
    /// deviation `sigmas[k]` (or uniform in `sigma_range`), zero for the
    /// `noise_free` devices.
    Planted {
        truth_range: [f64; 2],
        #[serde(default)]
        sigma_range: Option<[f64; 2]>,
        #[serde(default)]
        sigmas: Option<Vec<f64>>,
        #[serde(default)]
        noise_free: Vec<usize>,
    },
    Explicit {
        observations: Vec<Vec<f64>>,
        #[serde(default)]
        truths: Option<Vec<f64>>,
    },
}

/// Device `device` stays silent for the whole of `iteration` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub device: usize,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Re-sends the device's previous report under the current index.
    Replay,
    /// Flips one ciphertext bit and keeps the stale tag.
    Tamper,
    /// Forges a report with a random chain node and a matching tag.
    Inject,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackPhase {
    #[default]
    Weight,
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub device: usize,
    pub iteration: usize,
    #[serde(default)]
    pub phase: AttackPhase,
    /// Drop the honest report as well.
    #[serde(default)]
    pub suppress_original: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid scenario field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl ToString) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.to_string(),
    }
}

impl ScenarioConfig {
    /// Checks every field; errors name the offending one.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_shape()?;
        if self.mode == Mode::Lptd1 && !self.faults.is_empty() {
            return Err(bad("faults", "fault schedules need mode = lptd2"));
        }
        Ok(())
    }

    /// Everything except the lptd1/fault rule, so that the abort path can be
    /// exercised on purpose.
    pub fn validate_shape(&self) -> Result<(), ConfigError> {
        if self.devices == 0 {
            return Err(bad("devices", "must be at least 1"));
        }
        if self.objects == 0 {
            return Err(bad("objects", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(bad("iterations", "must be at least 1"));
        }
        if self.seed.is_none() {
            return Err(bad("seed", "no seed given"));
        }
        match &self.primes {
            None if !(MIN_KAPPA..=MAX_KAPPA).contains(&self.kappa) => {
                return Err(bad(
                    "kappa",
                    format!("must lie in [{MIN_KAPPA}, {MAX_KAPPA}]"),
                ));
            }
            Some(p) => {
                for (field, v) in [("primes.p", &p.p), ("primes.q", &p.q)] {
                    if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(bad(field, "must be a decimal integer"));
                    }
                }
            }
            None => {}
        }
        let [lo, hi] = self.blind_range;
        if lo == 0 || lo > hi {
            return Err(bad("blind_range", "must satisfy 1 <= lo <= hi"));
        }
        if self.preprovision_g && self.mode != Mode::Lptd2 {
            return Err(bad("preprovision_g", "only meaningful with mode = lptd2"));
        }
        if let Some(b) = self.obs_bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(bad("obs_bound", "must be positive and finite"));
            }
        }
        match &self.data {
            DataModel::Planted {
                truth_range,
                sigma_range,
                sigmas,
                noise_free,
            } => {
                if !(truth_range[0].is_finite()
                    && truth_range[1].is_finite()
                    && truth_range[0] <= truth_range[1])
                {
                    return Err(bad("data.truth_range", "must be a finite [low, high]"));
                }
                match (sigma_range, sigmas) {
                    (Some(r), None) => {
                        if !(r[0] >= 0.0 && r[0] <= r[1] && r[1].is_finite()) {
                            return Err(bad(
                                "data.sigma_range",
                                "must be a finite [low, high] with low >= 0",
                            ));
                        }
                    }
                    (None, Some(s)) => {
                        if s.len() != self.devices {
                            return Err(bad("data.sigmas", "needs one entry per device"));
                        }
                        if !s.iter().all(|v| v.is_finite() && *v >= 0.0) {
                            return Err(bad("data.sigmas", "entries must be finite and >= 0"));
                        }
                    }
                    _ => {
                        return Err(bad(
                            "data.sigma_range",
                            "give exactly one of sigma_range or sigmas",
                        ))
                    }
                }
                if let Some(&k) = noise_free.iter().find(|&&k| k >= self.devices) {
                    return Err(bad("data.noise_free", format!("device {k} does not exist")));
                }
            }
            DataModel::Explicit {
                observations,
                truths,
            } => {
                if observations.len() != self.devices {
                    return Err(bad("data.observations", "needs one row per device"));
                }
                if observations.iter().any(|r| r.len() != self.objects) {
                    return Err(bad(
                        "data.observations",
                        "every row needs one value per object",
                    ));
                }
                if observations.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(bad("data.observations", "values must be finite"));
                }
                if truths.as_ref().is_some_and(|t| t.len() != self.objects) {
                    return Err(bad("data.truths", "needs one value per object"));
                }
            }
        }
        for f in &self.faults {
            if f.device >= self.devices {
                return Err(bad("faults", format!("device {} does not exist", f.device)));
            }
            if f.iteration == 0 || f.iteration > self.iterations {
                return Err(bad(
                    "faults",
                    format!("iteration {} outside 1..={}", f.iteration, self.iterations),
                ));
            }
        }
        for j in 1..=self.iterations {
            let silent = (0..self.devices).filter(|&k| self.is_silent(k, j)).count();
            if silent == self.devices {
                return Err(bad(
                    "faults",
                    format!("every device is silent in iteration {j}"),
                ));
            }
        }
        for a in &self.attacks {
            if a.device >= self.devices {
                return Err(bad(
                    "attacks",
                    format!("device {} does not exist", a.device),
                ));
            }
            if a.iteration == 0 || a.iteration > self.iterations {
                return Err(bad(
                    "attacks",
                    format!("iteration {} outside 1..={}", a.iteration, self.iterations),
                ));
            }
        }
        Ok(())
    }

    pub fn is_silent(&self, device: usize, iteration: usize) -> bool {
        self.faults
            .iter()
            .any(|f| f.device == device && f.iteration == iteration)
    }

    pub fn protocol_config(&self, obs_bound: f64) -> ProtocolConfig {
        ProtocolConfig {
            devices: self.devices,
            objects: self.objects,
            iterations: self.iterations,
            mode: self.mode,
            blinding: self.blinding,
            codec: self.codec,
            obs_bound,
            blind_range: (self.blind_range[0], self.blind_range[1]),
            preprovision_g: self.preprovision_g,
        }
    }

    /// Gaussian scenario with planted truths in `[0, 100]` and per-device
    /// noise deviations in `[0.5, 5]`.
    pub fn gaussian(devices: usize, objects: usize, kappa: u32, mode: Mode, seed: u64) -> Self {
        Self {
            devices,
            objects,
            iterations: default_iterations(),
            kappa,
            mode,
            blinding: Blinding::Debias,
            seed: Some(seed),
            data: DataModel::Planted {
                truth_range: [0.0, 100.0],
                sigma_range: Some([0.5, 5.0]),
                sigmas: None,
                noise_free: Vec::new(),
            },
            faults: Vec::new(),
            attacks: Vec::new(),
            codec: FixedPointCodec::default(),
            blind_range: default_blind_range(),
            preprovision_g: false,
            truth_init: InitMode::Uniform,
            primes: None,
            obs_bound: None,
        }
    }
}
