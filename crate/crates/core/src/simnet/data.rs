//! Scenario data: planted truths with per-device gaussian noise, or an
//! explicit observation matrix.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::{DataModel, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    /// `[device][object]`, before quantization.
    pub observations: Vec<Vec<f64>>,
    pub planted: Option<Vec<f64>>,
    /// Noise deviation per device (planted data only).
    pub sigmas: Option<Vec<f64>>,
}

impl ScenarioData {
    /// Largest `|x|` over every reading, at least 1.
    pub fn max_abs(&self) -> f64 {
        self.observations
            .iter()
            .flatten()
            .fold(1.0f64, |acc, x| acc.max(libm::fabs(*x)))
    }
}

/// Expects a validated config.
pub fn generate<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> ScenarioData {
    match &cfg.data {
        DataModel::Explicit {
            observations,
            truths,
        } => ScenarioData {
            observations: observations.clone(),
            planted: truths.clone(),
            sigmas: None,
        },
        DataModel::Planted {
            truth_range,
            sigma_range,
            sigmas,
            noise_free,
        } => {
            let [lo, hi] = *truth_range;
            let planted: Vec<f64> = (0..cfg.objects)
                .map(|_| {
                    if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect();
            let mut sig: Vec<f64> = match (sigmas, sigma_range) {
                (Some(s), _) => s.clone(),
                (None, Some([a, b])) => (0..cfg.devices)
                    .map(|_| if b > a { rng.random_range(*a..=*b) } else { *a })
                    .collect(),
                (None, None) => alloc::vec![0.0; cfg.devices],
            };
            for &k in noise_free {
                sig[k] = 0.0;
            }
            let observations = sig
                .iter()
                .map(|&s| {
                    let noise = Normal::new(0.0, s).ok();
                    planted
                        .iter()
                        .map(|&t| match &noise {
                            Some(d) if s > 0.0 => t + d.sample(rng),
                            _ => t,
                        })
                        .collect()
                })
                .collect();
            ScenarioData {
                observations,
                planted: Some(planted),
                sigmas: Some(sig),
            }
        }
    }
}
