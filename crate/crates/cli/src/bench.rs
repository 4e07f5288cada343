//! Device and object sweeps over both modes.

use std::time::Instant;

use lptd_core::crypto::{MasterKey, PublicParams};
use lptd_core::protocol::Mode;
use lptd_core::simnet::ScenarioConfig;
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::run_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Sweep {
    Devices,
    Objects,
}

/// Inclusive `a:b:step`; `a` alone is a single point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl SweepRange {
    pub fn points(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step).collect()
    }
}

impl std::str::FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
        let (start, end, step) = match parts.as_slice() {
            [a] => (num(a)?, num(a)?, 1),
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err("expected a:b:step".into()),
        };
        if start == 0 || step == 0 || start > end {
            return Err("need 1 <= a <= b and step >= 1".into());
        }
        Ok(Self { start, end, step })
    }
}

/// Column order is part of the output format; append only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub mode: Mode,
    pub devices: usize,
    pub objects: usize,
    pub iterations: usize,
    pub wall_ms: f64,
    pub device_muls: u64,
    pub device_exps: u64,
    pub fog_exps: u64,
    pub cloud_exps: u64,
    pub recoveries: u64,
    pub runtime_mul_equivalents: u64,
    pub total_bytes: u64,
    pub matches_oracle: bool,
    /// Largest per-device exponentiation count in any iteration.
    pub max_device_exps_per_iteration: u64,
}

pub const BENCH_HEADER: &str = "mode,devices,objects,iterations,wall_ms,device_muls,device_exps,fog_exps,cloud_exps,recoveries,runtime_mul_equivalents,total_bytes,matches_oracle,max_device_exps_per_iteration";

pub struct BenchPlan {
    pub sweep: Sweep,
    pub range: SweepRange,
    /// Size of the dimension that is not swept.
    pub fixed: usize,
    pub iterations: usize,
    pub seed: u64,
}

pub fn run(
    plan: &BenchPlan,
    params: &PublicParams,
    master: &MasterKey,
) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = Vec::new();
    for point in plan.range.points() {
        let (k, m) = match plan.sweep {
            Sweep::Devices => (point, plan.fixed),
            Sweep::Objects => (plan.fixed, point),
        };
        for mode in [Mode::Lptd1, Mode::Lptd2] {
            let mut cfg = ScenarioConfig::gaussian(k, m, params.kappa(), mode, plan.seed);
            cfg.iterations = plan.iterations;
            let t = Instant::now();
            let metrics = run_with(&cfg, params.clone(), master.clone())?;
            let wall_ms = (t.elapsed().as_secs_f64() * 1e6).round() / 1e3;
            if !metrics.completed {
                return Err(CliError::Run(format!(
                    "{mode:?} K={k} M={m}: {}",
                    metrics.error.as_deref().unwrap_or("incomplete")
                )));
            }
            let ops = metrics.ops;
            rows.push(BenchRow {
                mode,
                devices: k,
                objects: m,
                iterations: plan.iterations,
                wall_ms,
                device_muls: ops.devices.mod_mul,
                device_exps: ops.devices.mod_exp,
                fog_exps: ops.fog.mod_exp,
                cloud_exps: ops.cloud.mod_exp,
                recoveries: metrics.recoveries,
                runtime_mul_equivalents: metrics.runtime_mul_equivalents,
                total_bytes: metrics.total_bytes(),
                matches_oracle: metrics.matches_oracle(metrics.tolerance()),
                max_device_exps_per_iteration: metrics
                    .iterations
                    .iter()
                    .map(|i| i.max_device_exps)
                    .max()
                    .unwrap_or(0),
            });
        }
    }
    Ok(rows)
}

/// Devices never exponentiate at runtime, LPTD-I never costs more than
/// LPTD-II at the same point (strictly less once LPTD-II recovers), and
/// every run tracks the oracle.
pub fn check(rows: &[BenchRow]) -> Vec<String> {
    let mut problems = Vec::new();
    for r in rows {
        if r.max_device_exps_per_iteration != 0 {
            problems.push(format!(
                "{:?} K={} M={}: device exponentiations at runtime",
                r.mode, r.devices, r.objects
            ));
        }
        if !r.matches_oracle {
            problems.push(format!(
                "{:?} K={} M={}: deviates from the oracle",
                r.mode, r.devices, r.objects
            ));
        }
    }
    for pair in rows.chunks(2) {
        if let [one, two] = pair {
            let ok = if two.recoveries > 0 {
                one.runtime_mul_equivalents < two.runtime_mul_equivalents
            } else {
                one.runtime_mul_equivalents <= two.runtime_mul_equivalents
            };
            if !ok {
                problems.push(format!(
                    "K={} M={}: lptd1 costs {} mul-equivalents, lptd2 {}",
                    one.devices,
                    one.objects,
                    one.runtime_mul_equivalents,
                    two.runtime_mul_equivalents
                ));
            }
        }
    }
    problems
}
