//! Acceptance gate: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lptd_core::crypto::{
    aggregate_product, decrypt, encrypt, finish_decrypt, keygen, keygen_from_primes, mask_encrypt,
    partial_decrypt, split_key, unmask_decode, FixedPointCodec, MasterKey, OpCounter, PublicParams,
};
use lptd_core::protocol::{
    lptd2_recover, ta_setup_with_keys, Blinding, Cloud, Device, Fog, Mode, ProtocolConfig,
};
use lptd_core::simnet::{
    account_bytes, run_scenario, AccountPhase, AttackKind, AttackPhase, AttackSpec, DataModel,
    FaultSpec, PinnedPrimes, RunMetrics, ScenarioConfig,
};
use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Criterion 4 tolerance: ten observation quanta at the default codec.
const ORACLE_TOL: f64 = 1e-3;

type Outcome = Result<String, String>;

struct Keys {
    pp: PublicParams,
    mk: MasterKey,
}

impl Keys {
    fn generate(kappa: u32, seed: u64) -> Self {
        let (pp, mk) = keygen(kappa, &mut ChaCha20Rng::seed_from_u64(seed)).expect("keygen");
        Self { pp, mk }
    }

    fn toy() -> Self {
        let (pp, mk) = keygen_from_primes(
            23u32.into(),
            47u32.into(),
            &mut ChaCha20Rng::seed_from_u64(0),
        )
        .expect("toy keys");
        Self { pp, mk }
    }

    fn pinned(&self) -> PinnedPrimes {
        PinnedPrimes {
            p: self.mk.p.to_string(),
            q: self.mk.q.to_string(),
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(cfg: &ScenarioConfig) -> Result<RunMetrics, String> {
    let m = run_scenario(cfg).map_err(|e| e.to_string())?;
    ensure(m.completed, || {
        format!("run did not complete: {:?}", m.error)
    })?;
    Ok(m)
}

fn argmax(values: impl IntoIterator<Item = Option<f64>>) -> Option<usize> {
    values
        .into_iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}

fn random_message(rng: &mut ChaCha20Rng, pp: &PublicParams) -> BigInt {
    let half: BigUint = pp.n() >> 1u32;
    let bound: BigInt = BigInt::from(half) - 1;
    let bits = bound.bits();
    loop {
        let mut bytes = vec![0u8; bits.div_ceil(8) as usize];
        rng.fill(bytes.as_mut_slice());
        let v = BigInt::from_signed_bytes_be(&bytes) >> (bytes.len() as u64 * 8 - bits);
        if v.magnitude() <= bound.magnitude() {
            return v;
        }
    }
}

fn c1_crypto_correctness(toy: &Keys, big: &Keys) -> Outcome {
    let ops = OpCounter::disabled();
    let mut failures = 0;
    for (label, keys) in [("toy", toy), ("kappa=512", big)] {
        let mut rng = ChaCha20Rng::seed_from_u64(100);
        let shares = split_key(&keys.mk, &mut rng).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let m = random_message(&mut rng, &keys.pp);
            let ct = encrypt(&keys.pp, &m, &mut rng, &ops).map_err(|e| e.to_string())?;
            let full = decrypt(&keys.pp, &keys.mk, &ct, &ops).map_err(|e| e.to_string())?;
            let half =
                partial_decrypt(&keys.pp, &shares.x1, &ct, &ops).map_err(|e| e.to_string())?;
            let both =
                partial_decrypt(&keys.pp, &shares.x2, &half, &ops).map_err(|e| e.to_string())?;
            let split = finish_decrypt(&keys.pp, &both).map_err(|e| e.to_string())?;
            if full != m || split != full {
                failures += 1;
                eprintln!("  {label}: m={m} full={full} split={split}");
            }
        }
    }
    ensure(failures == 0, || format!("{failures} failures"))?;
    Ok("2000 messages, 0 failures".into())
}

fn c2_homomorphic_identity(toy: &Keys, big: &Keys) -> Outcome {
    let ops = OpCounter::disabled();
    let mut rng = ChaCha20Rng::seed_from_u64(200);
    let mut failures = 0;
    for (i, keys) in [toy, big].into_iter().cycle().take(1000).enumerate() {
        let n = keys.pp.n().clone();
        let n_sq = &n * &n;
        let len = rng.random_range(1..=16usize);
        let cap: BigUint = (&n >> 1u32) / BigUint::from(len as u64);
        let ms: Vec<BigUint> = (0..len)
            .map(|_| {
                let bytes: Vec<u8> = (0..cap.bits().div_ceil(8)).map(|_| rng.random()).collect();
                BigUint::from_bytes_be(&bytes) % &cap
            })
            .collect();
        let sum: BigUint = ms.iter().sum();
        let expected = (BigUint::one() + &n * &sum) % &n_sq;
        let oracle = ms.iter().fold(BigUint::one(), |acc, m| {
            acc * (BigUint::one() + &n * m) % &n_sq
        });
        let cts: Vec<_> = ms
            .iter()
            .map(|m| {
                mask_encrypt(&keys.pp, &BigInt::from(m.clone()), &BigUint::one(), &ops)
                    .expect("in range")
            })
            .collect();
        let product = aggregate_product(&keys.pp, &cts, None, &ops).map_err(|e| e.to_string())?;
        let decoded =
            unmask_decode(&keys.pp, &product, &BigUint::one(), &ops).map_err(|e| e.to_string())?;
        if oracle != expected || product.c != expected || decoded.0 != BigInt::from(sum) {
            failures += 1;
            eprintln!("  vector {i} failed");
        }
    }
    ensure(failures == 0, || format!("{failures} failures"))?;
    Ok("1000 vectors, 0 failures".into())
}

fn c3_mask_cancellation() -> Outcome {
    let keys = Keys::generate(128, 300);
    let cfg = ProtocolConfig {
        devices: 10,
        objects: 3,
        iterations: 5,
        mode: Mode::Lptd1,
        blinding: Blinding::Debias,
        codec: FixedPointCodec::default(),
        obs_bound: 100.0,
        blind_range: (2, 1 << 16),
        preprovision_g: false,
    };
    let setup = ta_setup_with_keys(
        &cfg,
        keys.pp.clone(),
        keys.mk.clone(),
        &mut ChaCha20Rng::seed_from_u64(301),
    )
    .map_err(|e| e.to_string())?;
    let n_sq = keys.pp.n_sq();
    let mut cells = 0;
    for r in 0..cfg.reports_per_device() {
        for slot in 0..setup.fog.server_masks[r].len() {
            let mut acc =
                &setup.fog.server_masks[r][slot] * &setup.cloud.server_masks[r][slot] % n_sq;
            for d in &setup.devices {
                acc = acc * &d.masks[r].h[slot] % n_sq;
            }
            ensure(acc.is_one(), || {
                format!("report {r} slot {slot} does not cancel")
            })?;
            cells += 1;
        }
    }
    Ok(format!(
        "{cells} (report, slot) cells over {} reports cancel exactly",
        cfg.reports_per_device()
    ))
}

fn c4_oracle_equivalence(big: &Keys) -> Outcome {
    let start = Instant::now();
    let mut cfg = ScenarioConfig::gaussian(20, 10, 512, Mode::Lptd2, 400);
    cfg.primes = Some(big.pinned());
    let m = run(&cfg)?;
    let elapsed = start.elapsed();
    let n_bits = big.pp.n().bits();
    ensure(n_bits == 1024, || format!("|n| = {n_bits}"))?;
    ensure(m.iterations.len() == 10, || {
        format!("{} iterations", m.iterations.len())
    })?;
    for it in &m.iterations {
        let d = it.max_deviation.ok_or("oracle unavailable")?;
        ensure(d <= ORACLE_TOL, || {
            format!("iteration {}: deviation {d:e}", it.iteration)
        })?;
    }
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "max deviation {:.3e} over 10 iterations, |n| = 1024, {:.1}s",
        m.max_deviation().unwrap_or(f64::NAN),
        elapsed.as_secs_f64()
    ))
}

fn c5_fault_tolerance(toy: &Keys) -> Outcome {
    let cfg = ProtocolConfig {
        devices: 6,
        objects: 1,
        iterations: 1,
        mode: Mode::Lptd2,
        blinding: Blinding::Debias,
        codec: FixedPointCodec::new(0, 0),
        obs_bound: 3.0,
        blind_range: (1, 1),
        preprovision_g: false,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(500);
    let setup = ta_setup_with_keys(&cfg, toy.pp.clone(), toy.mk.clone(), &mut rng)
        .map_err(|e| e.to_string())?;
    let values: Vec<i64> = (0..6).map(|_| rng.random_range(-3..=3)).collect();
    let mut reports = Vec::new();
    for (keys, &v) in setup.devices.into_iter().zip(&values) {
        let mut dev = Device::new(keys, &cfg, &[v as f64]).map_err(|e| e.to_string())?;
        reports.push(dev.std_mean_report().map_err(|e| e.to_string())?);
    }
    let mut fog = Fog::new(
        setup.fog,
        &cfg,
        setup.params.clone(),
        ChaCha20Rng::seed_from_u64(501),
    );
    let mut cloud = Cloud::new(
        setup.cloud,
        &cfg,
        setup.params.clone(),
        ChaCha20Rng::seed_from_u64(502),
    );
    for mask in 0u32..64 {
        let subset: Vec<_> = (0..6)
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| reports[k].clone())
            .collect();
        let brute: i64 = (0..6)
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| values[k])
            .sum();
        let got = lptd2_recover(&mut fog, &mut cloud, &subset, 0)
            .map_err(|e| format!("subset {mask:06b}: {e}"))?;
        ensure(got.len() == 1 && got[0].0 == BigInt::from(brute), || {
            format!("subset {mask:06b}: recovered {:?}, expected {brute}", got)
        })?;
    }
    let mut worst = 0.0f64;
    for k in 0..6 {
        let mut sc = ScenarioConfig::gaussian(6, 4, 64, Mode::Lptd2, 510 + k as u64);
        sc.iterations = 5;
        sc.faults.push(FaultSpec {
            device: k,
            iteration: 2,
        });
        let m = run(&sc)?;
        let survivors: Vec<u32> = (0..6).filter(|&i| i != k as u32).collect();
        ensure(m.iterations[1].truth_present == survivors, || {
            format!("fault {k}: present {:?}", m.iterations[1].truth_present)
        })?;
        let d = m.max_deviation().ok_or("oracle unavailable")?;
        ensure(d <= ORACLE_TOL, || {
            format!("fault on device {k}: deviation {d:e}")
        })?;
        worst = worst.max(d);
    }
    Ok(format!(
        "64/64 subsets exact; 6 single-fault runs, max deviation {worst:.3e}"
    ))
}

fn c6_attack_resistance() -> Outcome {
    let (mut sent, mut rejected, mut honest, mut honest_rejected) = (0, 0, 0, 0);
    for run_id in 0..100u64 {
        let mode = if run_id % 2 == 0 {
            Mode::Lptd2
        } else {
            Mode::Lptd1
        };
        let mut cfg = ScenarioConfig::gaussian(5, 3, 64, mode, 600 + run_id);
        cfg.iterations = 3;
        let mut rng = ChaCha20Rng::seed_from_u64(run_id);
        for _ in 0..3 {
            let kind = [AttackKind::Replay, AttackKind::Tamper, AttackKind::Inject]
                [rng.random_range(0..3)];
            cfg.attacks.push(AttackSpec {
                kind,
                device: rng.random_range(0..5),
                iteration: rng.random_range(1..=3),
                phase: if rng.random() {
                    AttackPhase::Weight
                } else {
                    AttackPhase::Truth
                },
                suppress_original: mode == Mode::Lptd2 && rng.random_bool(0.25),
            });
        }
        let m = run(&cfg)?;
        sent += m.malicious_sent;
        rejected += m.malicious_rejected;
        honest += m.honest_sent;
        honest_rejected += m.honest_rejected;
        ensure(m.malicious_rejected == m.malicious_sent, || {
            format!(
                "run {run_id}: {} of {} malicious reports rejected",
                m.malicious_rejected, m.malicious_sent
            )
        })?;
        ensure(m.honest_rejected == 0, || {
            format!(
                "run {run_id}: {} honest reports rejected",
                m.honest_rejected
            )
        })?;
    }
    ensure(sent > 0, || "no malicious reports generated".into())?;
    Ok(format!(
        "{rejected}/{sent} malicious rejected, {honest_rejected}/{honest} honest rejected"
    ))
}

fn c7_communication(big: &Keys) -> Outcome {
    let u = big.pp.n_sq().bits();
    let k = 3u64;
    let iterations = 2u64;
    let mut rows = Vec::new();
    for objects in [1usize, 10, 100] {
        for mode in [Mode::Lptd1, Mode::Lptd2] {
            let mut cfg = ScenarioConfig::gaussian(k as usize, objects, 512, mode, 700);
            cfg.iterations = iterations as usize;
            cfg.primes = Some(big.pinned());
            let m = run(&cfg)?;
            ensure(m.ciphertext_bits == u, || {
                format!("U = {} vs bit-length(n²) = {u}", m.ciphertext_bits)
            })?;
            let m_obj = objects as u64;
            let (w, t) = match mode {
                Mode::Lptd1 => (u, (m_obj + 1) * u),
                Mode::Lptd2 => (2 * u, (m_obj + 2) * u),
            };
            for rec in m.uplink.iter().filter(|r| r.report >= 2) {
                let want = if rec.report % 2 == 0 { w } else { t };
                ensure(rec.ciphertext_bits == want, || {
                    format!(
                        "{mode:?} M={objects}: device {} report {} sent {} bits, want {want}",
                        rec.device, rec.report, rec.ciphertext_bits
                    )
                })?;
            }
            let checked_w = account_bytes(&m, AccountPhase::Weight).map_err(|e| e.to_string())?;
            let checked_t = account_bytes(&m, AccountPhase::Truth).map_err(|e| e.to_string())?;
            ensure(
                checked_w as u64 == k * iterations && checked_t as u64 == k * iterations,
                || format!("checked {checked_w}+{checked_t} reports"),
            )?;
            rows.push(format!("{mode:?}/M={objects}"));
        }
    }
    Ok(format!("U = {u}; {} configurations exact", rows.len()))
}

fn c8_device_cost() -> Outcome {
    let mut points = Vec::new();
    for k in (10..=50).step_by(10) {
        let mut metrics = Vec::new();
        for mode in [Mode::Lptd1, Mode::Lptd2] {
            let mut cfg = ScenarioConfig::gaussian(k, 5, 128, mode, 800);
            cfg.iterations = 3;
            let m = run(&cfg)?;
            let exps = m
                .iterations
                .iter()
                .map(|i| i.max_device_exps)
                .max()
                .unwrap_or(0);
            ensure(exps == 0, || {
                format!("{mode:?} K={k}: {exps} device exponentiations in an iteration")
            })?;
            metrics.push(m);
        }
        let (one, two) = (&metrics[0], &metrics[1]);
        let (c1, c2) = (one.runtime_mul_equivalents, two.runtime_mul_equivalents);
        ensure(c1 <= c2, || format!("K={k}: LPTD-I {c1} > LPTD-II {c2}"))?;
        ensure(two.recoveries == 0 || c1 < c2, || {
            format!("K={k}: recoveries ran but costs are equal")
        })?;
        points.push(format!("K={k}: {c1} < {c2}"));
    }
    Ok(format!(
        "0 device exps; runtime mul-equivalents {}",
        points.join(", ")
    ))
}

fn c9_weight_quality() -> Outcome {
    let (mut oracle_hits, mut secure_hits) = (0, 0);
    for trial in 0..100u64 {
        let mut cfg = ScenarioConfig::gaussian(10, 30, 64, Mode::Lptd2, 900 + trial);
        let clean = (trial % 10) as usize;
        if let DataModel::Planted { noise_free, .. } = &mut cfg.data {
            noise_free.push(clean);
        }
        let m = run(&cfg)?;
        let last = m.iterations.last().ok_or("no iterations")?;
        let oracle = last.oracle_weights.as_ref().ok_or("oracle unavailable")?;
        oracle_hits += usize::from(argmax(oracle.iter().map(|&w| Some(w))) == Some(clean));
        secure_hits += usize::from(argmax(last.blinded_weights.iter().copied()) == Some(clean));
    }
    ensure(oracle_hits >= 95 && secure_hits >= 95, || {
        format!("oracle {oracle_hits}/100, secure {secure_hits}/100")
    })?;
    Ok(format!(
        "noise-free device ranked first: oracle {oracle_hits}/100, secure {secure_hits}/100"
    ))
}

fn c10_bias_demonstration() -> Outcome {
    let mut cfg = ScenarioConfig::gaussian(20, 10, 128, Mode::Lptd2, 1000);
    // r_j = r_j1 · r_j2 >= 32 · 32 = 2^10.
    cfg.blind_range = [32, 64];
    cfg.blinding = Blinding::Literal;
    let literal = run(&cfg)?;
    cfg.blinding = Blinding::Debias;
    let debias = run(&cfg)?;
    let bias = literal.max_deviation().ok_or("oracle unavailable")?;
    let clean = debias.max_deviation().ok_or("oracle unavailable")?;
    ensure(bias > ORACLE_TOL, || {
        format!("literal deviation {bias:e} within tolerance")
    })?;
    ensure(clean <= ORACLE_TOL, || {
        format!("debias deviation {clean:e} exceeds tolerance")
    })?;
    Ok(format!(
        "literal deviation {bias:.3e} > {ORACLE_TOL:e} >= debias {clean:.3e}"
    ))
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let toy = Keys::toy();
    let big = Keys::generate(512, 42);
    let criteria: Vec<(&str, Criterion)> = vec![
        (
            "crypto correctness",
            Box::new(|| c1_crypto_correctness(&toy, &big)),
        ),
        (
            "homomorphic identity",
            Box::new(|| c2_homomorphic_identity(&toy, &big)),
        ),
        ("mask cancellation", Box::new(c3_mask_cancellation)),
        (
            "oracle equivalence",
            Box::new(|| c4_oracle_equivalence(&big)),
        ),
        ("fault tolerance", Box::new(|| c5_fault_tolerance(&toy))),
        ("attack resistance", Box::new(c6_attack_resistance)),
        (
            "communication accounting",
            Box::new(|| c7_communication(&big)),
        ),
        ("device cost", Box::new(c8_device_cost)),
        ("weight quality", Box::new(c9_weight_quality)),
        ("bias demonstration", Box::new(c10_bias_demonstration)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
