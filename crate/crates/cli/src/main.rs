//! `lptd`: command-line front end to the simulator.
//!
//! Exit codes: 0 success, 1 run error, 2 verification failure, 3 config error.

mod bench;
mod error;
mod record;
mod scenario;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lptd_core::crypto::{keygen, split_key, KeyBundle};
use lptd_core::protocol::Blinding;
use lptd_core::simnet::{role_rng, STREAM_KEYGEN};

use bench::{BenchPlan, Sweep, SweepRange};
use error::CliError;
use record::ResultRecord;
use scenario::ScenarioArgs;

#[derive(Debug, Parser)]
#[command(
    name = "lptd",
    version,
    about = "Privacy-preserving truth discovery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a key bundle (public parameters, master key, split shares).
    Keygen {
        /// Modulus size in bits.
        #[arg(long, default_value_t = 1024)]
        kappa: u32,
        /// Falls back to LPTD_SEED, then to OS entropy.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario and write `<digest>.json` and `<digest>.csv`.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario and compare every iteration with the plaintext oracle.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Sweep devices or objects across both modes.
    Bench {
        #[arg(long, value_enum)]
        sweep: Sweep,
        /// Inclusive `a:b:step`.
        #[arg(long)]
        range: SweepRange,
        /// Size of the other dimension.
        #[arg(long, default_value_t = 100)]
        fixed: usize,
        #[arg(long, default_value_t = 2)]
        iterations: usize,
        #[arg(long, default_value_t = 512)]
        kappa: u32,
        /// Falls back to LPTD_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Key bundle from `keygen`; replaces key generation and `--kappa`.
        #[arg(long)]
        keys: Option<PathBuf>,
        /// Also write the table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lptd: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Keygen { kappa, seed, out } => cmd_keygen(kappa, seed, &out),
        Command::Run { scenario, out } => cmd_run(&scenario, &out),
        Command::Verify { scenario } => cmd_verify(&scenario),
        Command::Bench {
            sweep,
            range,
            fixed,
            iterations,
            kappa,
            seed,
            keys,
            out,
        } => {
            let seed = scenario::flag_or_env(seed)?.unwrap_or(0);
            let plan = BenchPlan {
                sweep,
                range,
                fixed,
                iterations,
                seed,
            };
            cmd_bench(&plan, kappa, keys.as_deref(), out.as_deref())
        }
    }
}

fn cmd_keygen(kappa: u32, seed: Option<u64>, out: &std::path::Path) -> Result<(), CliError> {
    let seed = match scenario::flag_or_env(seed)? {
        Some(s) => s,
        None => {
            let s = rand::random();
            eprintln!("lptd: keygen seed {s}");
            s
        }
    };
    // Same stream a scenario with this seed would generate its keys from.
    let mut rng = role_rng(seed, STREAM_KEYGEN);
    let (params, master) =
        keygen(kappa, &mut rng).map_err(|e| CliError::Config(format!("kappa: {e}")))?;
    let shares = split_key(&master, &mut rng).map_err(|e| CliError::Run(e.to_string()))?;
    let bundle = KeyBundle {
        params,
        master,
        shares,
    };
    std::fs::write(out, bundle.to_bytes()).map_err(|e| CliError::io(out, e))?;
    println!("wrote {} ({kappa}-bit modulus)", out.display());
    Ok(())
}

fn cmd_run(args: &ScenarioArgs, out: &std::path::Path) -> Result<(), CliError> {
    let prepared = args.prepare()?;
    let started = record::unix_ms();
    let metrics = prepared.run()?;
    let rec = ResultRecord {
        scenario_digest: prepared.digest.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: prepared.config.clone(),
        key_bundle: prepared.keys.as_ref().map(scenario::bundle_digest),
        tolerance: metrics.tolerance(),
        oracle: record::oracle_comparison(&metrics),
        metrics,
        started_unix_ms: started,
        finished_unix_ms: record::unix_ms(),
    };
    let (json, csv) = rec.write(out)?;
    println!("{}", json.display());
    println!("{}", csv.display());
    if !rec.metrics.completed {
        return Err(CliError::Run(
            rec.metrics
                .error
                .clone()
                .unwrap_or_else(|| "run did not complete".into()),
        ));
    }
    Ok(())
}

fn cmd_verify(args: &ScenarioArgs) -> Result<(), CliError> {
    let prepared = args.prepare()?;
    if !prepared.config.attacks.is_empty() {
        return Err(CliError::Config(
            "verify takes scenarios without attacks".into(),
        ));
    }
    let m = prepared.run()?;
    if !m.completed {
        return Err(CliError::Run(
            m.error
                .clone()
                .unwrap_or_else(|| "run did not complete".into()),
        ));
    }
    let tol = m.tolerance();
    let mut stdout = std::io::stdout().lock();
    let mut worst = 0.0f64;
    for it in &m.iterations {
        let d = it.max_deviation.unwrap_or(f64::INFINITY);
        worst = worst.max(d);
        let verdict = if d <= tol { "PASS" } else { "FAIL" };
        let _ = writeln!(
            stdout,
            "iteration {:>3}  max_deviation {d:.3e}  {verdict}",
            it.iteration
        );
    }
    let blinding = match prepared.config.blinding {
        Blinding::Debias => "debias",
        Blinding::Literal => "literal",
    };
    if worst <= tol && !m.iterations.is_empty() {
        let _ = writeln!(
            stdout,
            "PASS {blinding}: max deviation {worst:.3e} within tolerance {tol:.1e}"
        );
        Ok(())
    } else {
        let _ = writeln!(
            stdout,
            "FAIL {blinding}: max deviation {worst:.3e} exceeds tolerance {tol:.1e}"
        );
        Err(CliError::Verify(format!(
            "bias {worst:.3e} above tolerance {tol:.1e}"
        )))
    }
}

fn cmd_bench(
    plan: &BenchPlan,
    kappa: u32,
    keys: Option<&std::path::Path>,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let (params, master) = match keys {
        Some(path) => {
            let b = scenario::load_keys(path)?;
            (b.params, b.master)
        }
        None => keygen(kappa, &mut role_rng(plan.seed, STREAM_KEYGEN))
            .map_err(|e| CliError::Config(format!("kappa: {e}")))?,
    };
    let rows = bench::run(plan, &params, &master)?;
    record::write_rows(std::io::stdout().lock(), &rows, bench::BENCH_HEADER)
        .map_err(|e| CliError::Run(e.to_string()))?;
    if let Some(path) = out {
        record::write_csv(path, &rows, bench::BENCH_HEADER)?;
    }
    let problems = bench::check(&rows);
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(problems.join("; ")))
    }
}
