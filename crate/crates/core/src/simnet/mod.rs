//! Deterministic simulation of a full run: TA setup, the std rounds, then
//! `iterations` weight and truth rounds, with faults and bus attacks.
//!
//! Every random draw comes from a ChaCha20 stream derived from the scenario
//! seed, one stream per role, so identical configs give identical metrics.

mod adversary;
mod bus;
pub mod config;
pub mod data;
pub mod metrics;

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use adversary::{Adversary, Delivery};
pub use bus::{violates_privacy, Bus, Envelope};
pub use config::{
    AttackKind, AttackPhase, AttackSpec, ConfigError, DataModel, FaultSpec, InitMode, PinnedPrimes,
    ScenarioConfig,
};
pub use data::ScenarioData;
pub use metrics::{
    account_bytes, expected_uplink_bits, AccountPhase, AccountingError, EntityOps, IterationRecord,
    RejectionRecord, RunMetrics, TrafficRow, UplinkRecord,
};

use crate::crypto::{
    keygen, keygen_from_primes, MasterKey, OpCounter, OpCounts, PublicParams, Scale,
};
use crate::hashchain::ChainVerifier;
use crate::protocol::{
    ta_setup_with_keys, Blinding, Body, Cloud, Device, DeviceReport, Fog, Mode, Party, Phase,
    ProtocolError, ProtocolMessage, RealBroadcast,
};
use crate::truth::{
    rmse, run_crh_with_rounds, CrhOptions, ObservationMatrix, RoundPresence, TruthInit, TruthVector,
};

const STREAM_DATA: u64 = 1;
/// Stream that scenario key generation draws from.
pub const STREAM_KEYGEN: u64 = 2;
const STREAM_TA: u64 = 3;
const STREAM_FOG: u64 = 4;
const STREAM_CLOUD: u64 = 5;
const STREAM_ADVERSARY: u64 = 6;

/// Role-specific generator derived from the scenario seed.
pub fn role_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn config_error(field: &str, e: impl ToString) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: e.to_string(),
    }
}

fn parse_prime(field: &str, s: &str) -> Result<BigUint, ConfigError> {
    s.parse()
        .map_err(|_| config_error(field, "not a decimal integer"))
}

/// Validates `cfg` and runs it.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics, ConfigError> {
    cfg.validate()?;
    run_scenario_unchecked(cfg)
}

/// Runs without the lptd1/fault rule, so an lptd1 run with a silent device
/// aborts inside the protocol and reports it in the metrics.
///
/// Only configuration problems are returned as errors; anything an entity
/// raises mid-run ends the run with `completed = false`.
pub fn run_scenario_unchecked(cfg: &ScenarioConfig) -> Result<RunMetrics, ConfigError> {
    run_inner(cfg, None)
}

/// Validates `cfg` and runs it under existing keys; `kappa` and `primes`
/// are ignored.
pub fn run_scenario_with_keys(
    cfg: &ScenarioConfig,
    params: PublicParams,
    master: MasterKey,
) -> Result<RunMetrics, ConfigError> {
    cfg.validate()?;
    run_inner(cfg, Some((params, master)))
}

fn run_inner(
    cfg: &ScenarioConfig,
    keys: Option<(PublicParams, MasterKey)>,
) -> Result<RunMetrics, ConfigError> {
    cfg.validate_shape()?;
    let seed = cfg
        .seed
        .ok_or_else(|| config_error("seed", "no seed given"))?;
    let data = data::generate(cfg, &mut role_rng(seed, STREAM_DATA));
    let bound = cfg.obs_bound.unwrap_or_else(|| data.max_abs());
    let pcfg = cfg.protocol_config(bound);
    pcfg.validate().map_err(|e| config_error("config", e))?;

    let mut keygen_rng = role_rng(seed, STREAM_KEYGEN);
    let (params, master) = match (keys, &cfg.primes) {
        (Some(keys), _) => keys,
        (None, Some(pp)) => keygen_from_primes(
            parse_prime("primes.p", &pp.p)?,
            parse_prime("primes.q", &pp.q)?,
            &mut keygen_rng,
        )
        .map_err(|e| config_error("primes", e))?,
        (None, None) => keygen(cfg.kappa, &mut keygen_rng).map_err(|e| config_error("kappa", e))?,
    };
    let setup =
        ta_setup_with_keys(&pcfg, params, master, &mut role_rng(seed, STREAM_TA)).map_err(|e| {
            match e {
                ProtocolError::Overflow(_) => config_error("kappa", e),
                other => config_error("config", other),
            }
        })?;
    let params = setup.params.clone();
    let u = params.ciphertext_bits();
    let devices = setup
        .devices
        .into_iter()
        .zip(&data.observations)
        .map(|(keys, obs)| Device::new(keys, &pcfg, obs))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_error("obs_bound", e))?;
    let preprovisioned_bits = setup
        .fog
        .companions
        .as_ref()
        .map_or(0, |c| c.iter().map(Vec::len).sum::<usize>()) as u64
        * u;
    let max_position = pcfg.reports_per_device() as u64;
    let shadow = setup
        .fog
        .heads
        .iter()
        .map(|h| ChainVerifier::new(*h, max_position))
        .collect();
    let fog = Fog::new(setup.fog, &pcfg, params.clone(), role_rng(seed, STREAM_FOG));
    let cloud = Cloud::new(
        setup.cloud,
        &pcfg,
        params.clone(),
        role_rng(seed, STREAM_CLOUD),
    );
    let companion = cfg.mode == Mode::Lptd2 && !cfg.preprovision_g;
    let adversary = Adversary::new(
        cfg.attacks.clone(),
        params.clone(),
        cfg.objects,
        companion,
        role_rng(seed, STREAM_ADVERSARY),
    );

    let mut sim = Sim {
        cfg,
        params: params.clone(),
        devices,
        fog,
        cloud,
        bus: Bus::new(params.element_bytes(), u),
        adversary,
        rejections: Vec::new(),
        shadow,
        out_of_order: 0,
        honest_sent: 0,
        malicious_sent: 0,
        std_present: Vec::new(),
        init_truths: None,
        rounds: Vec::new(),
    };
    let outcome = sim.run();
    Ok(sim.finish(outcome, setup.ops, data, preprovisioned_bits))
}

/// Per-iteration facts gathered during the run.
struct Round {
    weight_present: Vec<u32>,
    truth_present: Vec<u32>,
    truths: Vec<f64>,
    blinded_weights: Vec<Option<f64>>,
    max_device_exps: u64,
    max_device_muls: u64,
    bytes_so_far: u64,
    rejections: u64,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    params: PublicParams,
    devices: Vec<Device>,
    fog: Fog,
    cloud: Cloud,
    bus: Bus,
    adversary: Adversary,
    rejections: Vec<RejectionRecord>,
    /// Bus-side copy of every device's chain, used to inspect disclosures.
    shadow: Vec<ChainVerifier>,
    out_of_order: u64,
    honest_sent: u64,
    malicious_sent: u64,
    std_present: Vec<u32>,
    init_truths: Option<Vec<f64>>,
    rounds: Vec<Round>,
}

impl Sim<'_> {
    /// Sends one message and hands back what the bus delivers.
    fn post(&mut self, from: Party, to: Party, body: Body) -> Body {
        self.bus.send(ProtocolMessage::new(from, to, body), false);
        self.bus
            .pop()
            .expect("bus delivers what was just sent")
            .msg
            .body
    }

    fn broadcast(&mut self, b: RealBroadcast, to: &[u32]) -> Result<(), ProtocolError> {
        let Body::Broadcast(b) = self.post(Party::Cloud, Party::Devices, Body::Broadcast(b)) else {
            unreachable!("broadcast body")
        };
        for &k in to {
            self.devices[k as usize].on_broadcast(&b)?;
        }
        Ok(())
    }

    /// One collection round: reports from `participants`, bus attacks, then
    /// fog filtering. Returns the accepted devices.
    fn collect(
        &mut self,
        phase: Phase,
        participants: &[u32],
        mut make: impl FnMut(&mut Device) -> Result<DeviceReport, ProtocolError>,
    ) -> Result<Vec<u32>, ProtocolError> {
        let iteration = phase.iteration().unwrap_or(0) as u32;
        self.bus.set_phase(phase.label(), iteration);
        self.fog.open_round(phase);
        for k in 0..self.devices.len() {
            let honest = if participants.contains(&(k as u32)) {
                Some(make(&mut self.devices[k])?)
            } else {
                None
            };
            for d in self.adversary.intercept(k, phase, honest) {
                if d.malicious {
                    self.malicious_sent += 1;
                } else {
                    self.honest_sent += 1;
                    let position =
                        Phase::from_report_index(d.report.report as usize).chain_position();
                    if !self.shadow[k].verify_step(
                        &d.report.chain_node,
                        position,
                        &OpCounter::disabled(),
                    ) {
                        self.out_of_order += 1;
                    }
                }
                let msg = ProtocolMessage::new(
                    Party::Device(k as u32),
                    Party::Fog,
                    Body::DeviceReport(d.report),
                );
                self.bus.send(msg, d.malicious);
            }
        }
        while let Some(env) = self.bus.pop() {
            let Body::DeviceReport(report) = &env.msg.body else {
                continue;
            };
            if let Err(rej) = self.fog.receive(report) {
                self.rejections.push(RejectionRecord {
                    device: rej.device,
                    report: rej.report,
                    iteration,
                    phase: phase.label().into(),
                    reason: rej.reason,
                    malicious: env.malicious,
                });
            }
        }
        Ok(self.fog.accepted())
    }

    fn aggregate_to_cloud(&mut self) -> Result<crate::protocol::FogAggregate, ProtocolError> {
        let agg = self.fog.aggregate()?;
        match self.post(Party::Fog, Party::Cloud, Body::FogAggregate(agg)) {
            Body::FogAggregate(a) => Ok(a),
            _ => unreachable!("aggregate body"),
        }
    }

    fn run(&mut self) -> Result<(), ProtocolError> {
        let everyone: Vec<u32> = (0..self.devices.len() as u32).collect();

        self.std_present = self.collect(Phase::StdMean, &everyone, Device::std_mean_report)?;
        let agg = self.aggregate_to_cloud()?;
        let mean = self.cloud.on_std_mean(&agg)?;
        self.broadcast(mean, &everyone)?;

        self.collect(Phase::StdDev, &everyone, Device::std_dev_report)?;
        let agg = self.aggregate_to_cloud()?;
        let std = self.cloud.on_std_dev(&agg)?;
        self.broadcast(std, &everyone)?;

        self.bus.set_phase("init", 0);
        let init = match self.cfg.truth_init {
            InitMode::Uniform => TruthInit::Uniform,
            InitMode::Mean => TruthInit::Mean,
        };
        let truths = self.cloud.initial_truths(&init)?;
        self.broadcast(truths, &everyone)?;
        self.init_truths = self.cloud.truths();

        for j in 1..=self.cfg.iterations {
            self.iteration(j, &everyone)?;
        }
        Ok(())
    }

    fn iteration(&mut self, j: usize, everyone: &[u32]) -> Result<(), ProtocolError> {
        let before: Vec<OpCounts> = self.devices.iter().map(Device::ops).collect();
        let rejections_before = self.rejections.len();
        let active: Vec<u32> = everyone
            .iter()
            .copied()
            .filter(|&k| !self.cfg.is_silent(k as usize, j))
            .collect();

        let weight_present = self.collect(Phase::Weight(j), &active, |d| d.weight_report(j))?;
        let agg = self.aggregate_to_cloud()?;
        let blinded = self.cloud.on_weight_aggregate(&agg, j)?;
        let Body::BlindedSum(blinded) =
            self.post(Party::Cloud, Party::Fog, Body::BlindedSum(blinded))
        else {
            unreachable!("blinded sum body")
        };
        let (reblinded, share) = self.fog.reblind(&blinded)?;
        if let Some(share) = share {
            if let Body::DebiasShare(s) =
                self.post(Party::Fog, Party::Cloud, Body::DebiasShare(share))
            {
                self.cloud.on_debias(&s)?;
            }
        }
        let Body::BlindedSum(reblinded) =
            self.post(Party::Fog, Party::Devices, Body::BlindedSum(reblinded))
        else {
            unreachable!("blinded sum body")
        };
        let codec = self.cfg.codec;
        let mut blinded_weights = alloc::vec![None; self.devices.len()];
        for &k in &weight_present {
            let w = self.devices[k as usize].on_blinded_sum(&reblinded)?;
            blinded_weights[k as usize] = Some(codec.decode_i64(w, Scale::Weight));
        }

        let truth_present =
            self.collect(Phase::Truth(j), &weight_present, |d| d.truth_report(j))?;
        if self.cfg.blinding == Blinding::Debias && truth_present != self.std_present {
            let sums = self.fog.observation_sum_for(&truth_present)?;
            if let Body::FogAggregate(a) =
                self.post(Party::Fog, Party::Cloud, Body::FogAggregate(sums))
            {
                self.cloud.on_observation_sum(&a)?;
            }
        }
        let agg = self.aggregate_to_cloud()?;
        let truths = self.cloud.on_truth_aggregate(&agg, j)?;
        self.broadcast(truths, everyone)?;

        let (mut max_exps, mut max_muls) = (0, 0);
        for (d, b) in self.devices.iter().zip(&before) {
            let delta = d.ops() - *b;
            max_exps = max_exps.max(delta.mod_exp + delta.mod_inv);
            max_muls = max_muls.max(delta.mod_mul);
        }
        self.rounds.push(Round {
            weight_present,
            truth_present,
            truths: self.cloud.truths().unwrap_or_default(),
            blinded_weights,
            max_device_exps: max_exps,
            max_device_muls: max_muls,
            bytes_so_far: self.bus.total_bytes(),
            rejections: (self.rejections.len() - rejections_before) as u64,
        });
        Ok(())
    }

    fn finish(
        self,
        outcome: Result<(), ProtocolError>,
        ta_ops: OpCounts,
        data: ScenarioData,
        preprovisioned_bits: u64,
    ) -> RunMetrics {
        let k = self.devices.len();
        let quantized: Vec<Vec<f64>> = self.devices.iter().map(Device::observations).collect();
        let oracle = self.oracle(&quantized);
        let planted = data.planted;
        let mut iterations = Vec::with_capacity(self.rounds.len());
        for (t, r) in self.rounds.iter().enumerate() {
            let (o_truths, o_weights) = match &oracle {
                Some(trace) => (Some(trace[t].0.clone()), Some(trace[t].1.clone())),
                None => (None, None),
            };
            let max_dev = o_truths.as_ref().map(|o| {
                o.iter()
                    .zip(&r.truths)
                    .fold(0.0f64, |acc, (a, b)| acc.max(libm::fabs(a - b)))
            });
            iterations.push(IterationRecord {
                iteration: t as u32 + 1,
                weight_present: r.weight_present.clone(),
                truth_present: r.truth_present.clone(),
                truths: r.truths.clone(),
                blinded_weights: r.blinded_weights.clone(),
                rmse_vs_oracle: o_truths.as_ref().map(|o| rmse(&r.truths, o)),
                rmse_vs_planted: planted.as_ref().map(|p| rmse(&r.truths, p)),
                oracle_truths: o_truths,
                oracle_weights: o_weights,
                max_deviation: max_dev,
                max_device_exps: r.max_device_exps,
                max_device_muls: r.max_device_muls,
                bytes_so_far: r.bytes_so_far,
                rejections: r.rejections,
            });
        }
        let devices_ops = self
            .devices
            .iter()
            .map(Device::ops)
            .fold(OpCounts::default(), |a, b| a + b);
        let ops = EntityOps {
            ta: ta_ops,
            devices: devices_ops,
            fog: self.fog.ops(),
            cloud: self.cloud.ops(),
        };
        let exp_bits = 2 * self.params.n().bits();
        let honest_rejected = self.rejections.iter().filter(|r| !r.malicious).count() as u64;
        let malicious_rejected = self.rejections.iter().filter(|r| r.malicious).count() as u64;
        let final_truths = iterations.last().map(|i| i.truths.clone());
        let privacy_violations = self.bus.privacy_violations();
        let verifier_positions = (0..k)
            .map(|d| self.fog.verifier(d).last_position())
            .collect();
        let (traffic, uplink) = self.bus.into_parts();
        let completed = outcome.is_ok();
        RunMetrics {
            mode: self.cfg.mode,
            devices: k as u32,
            objects: self.cfg.objects as u32,
            kappa: self.params.kappa(),
            ciphertext_bits: self.params.ciphertext_bits(),
            preprovision_g: self.cfg.preprovision_g,
            completed,
            error: outcome.err().map(|e| format!("{e}")),
            rmse_vs_oracle: iterations.last().and_then(|i| i.rmse_vs_oracle),
            rmse_vs_planted: iterations.last().and_then(|i| i.rmse_vs_planted),
            iterations,
            traffic,
            uplink,
            preprovisioned_bits,
            runtime_mul_equivalents: ops.runtime().mul_equivalents(exp_bits),
            ops,
            recoveries: self.fog.recoveries(),
            rejections: self.rejections,
            privacy_violations,
            out_of_order_disclosures: self.out_of_order,
            verifier_positions,
            honest_sent: self.honest_sent,
            honest_rejected,
            malicious_sent: self.malicious_sent,
            malicious_rejected,
            planted_truths: planted,
            final_truths,
            obs_quantum: 1.0 / self.cfg.codec.factor(Scale::Obs),
        }
    }

    /// Plaintext CRH over the quantized readings, started from the cloud's
    /// initial truths and restricted to each round's accepted devices.
    fn oracle(&self, quantized: &[Vec<f64>]) -> Option<Vec<(Vec<f64>, Vec<f64>)>> {
        let init = self.init_truths.clone()?;
        if self.rounds.is_empty() {
            return None;
        }
        let k = quantized.len();
        let mask = |set: &[u32]| -> Vec<bool> { (0..k as u32).map(|i| set.contains(&i)).collect() };
        let rounds: Vec<RoundPresence> = self
            .rounds
            .iter()
            .map(|r| RoundPresence {
                weight: mask(&r.weight_present),
                truth: mask(&r.truth_present),
            })
            .collect();
        let obs = ObservationMatrix::continuous(quantized).ok()?;
        let opts = CrhOptions {
            iterations: self.rounds.len(),
            init: TruthInit::Given(TruthVector::scalars(init)),
            early_stop: false,
        };
        // Given init draws nothing.
        let mut rng = role_rng(0, 0);
        let out = run_crh_with_rounds(&obs, &opts, &mut rng, &rounds).ok()?;
        Some(
            out.trace
                .into_iter()
                .map(|t| (t.truths.values().to_vec(), t.weights.0))
                .collect(),
        )
    }
}
