//! Scenario loading, seed resolution and content digests.

use std::path::{Path, PathBuf};

use lptd_core::crypto::{KeyBundle, MasterKey, PublicParams};
use lptd_core::protocol::Blinding;
use lptd_core::simnet::{run_scenario, run_scenario_with_keys, RunMetrics, ScenarioConfig};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SEED_ENV: &str = "LPTD_SEED";

/// `--seed`, then the scenario's own seed, then `LPTD_SEED`.
pub fn resolve_seed(
    flag: Option<u64>,
    file: Option<u64>,
    env: Option<&str>,
) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        None => Err(CliError::Config(format!(
            "no seed: pass --seed, set `seed` in the scenario or set {SEED_ENV}"
        ))),
    }
}

pub fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

/// `--seed`, then `LPTD_SEED`, for commands without a scenario file.
pub fn flag_or_env(flag: Option<u64>) -> Result<Option<u64>, CliError> {
    match (flag, env_seed()) {
        (Some(s), _) => Ok(Some(s)),
        (None, Some(v)) => resolve_seed(None, None, Some(&v)).map(Some),
        (None, None) => Ok(None),
    }
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_keys(path: &Path) -> Result<KeyBundle, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    KeyBundle::from_bytes(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Flags shared by `run` and `verify`.
#[derive(Debug, Clone, clap::Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Key bundle from `keygen`; replaces key generation.
    #[arg(long)]
    pub keys: Option<PathBuf>,
    #[arg(long, value_parser = parse_blinding)]
    pub blinding: Option<Blinding>,
    /// Blind range as `lo:hi`.
    #[arg(long, value_parser = parse_pair)]
    pub blind_range: Option<[u64; 2]>,
}

fn parse_blinding(s: &str) -> Result<Blinding, String> {
    match s {
        "debias" => Ok(Blinding::Debias),
        "literal" => Ok(Blinding::Literal),
        _ => Err(format!("expected `debias` or `literal`, got `{s}`")),
    }
}

fn parse_pair(s: &str) -> Result<[u64; 2], String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let parse = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("`{v}`: {e}"));
    Ok([parse(lo)?, parse(hi)?])
}

/// A scenario with its seed resolved and overrides applied.
pub struct Prepared {
    pub config: ScenarioConfig,
    pub keys: Option<KeyBundle>,
    pub digest: String,
}

impl ScenarioArgs {
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        let mut config = load(&self.scenario)?;
        config.seed = Some(resolve_seed(self.seed, config.seed, env_seed().as_deref())?);
        if let Some(b) = self.blinding {
            config.blinding = b;
        }
        if let Some(r) = self.blind_range {
            config.blind_range = r;
        }
        let keys = self.keys.as_deref().map(load_keys).transpose()?;
        let digest = digest(&config, keys.as_ref());
        Ok(Prepared {
            config,
            keys,
            digest,
        })
    }
}

impl Prepared {
    pub fn run(&self) -> Result<RunMetrics, CliError> {
        Ok(match &self.keys {
            Some(k) => run_with(&self.config, k.params.clone(), k.master.clone())?,
            None => run_scenario(&self.config)?,
        })
    }
}

pub fn run_with(
    cfg: &ScenarioConfig,
    params: PublicParams,
    master: MasterKey,
) -> Result<RunMetrics, CliError> {
    Ok(run_scenario_with_keys(cfg, params, master)?)
}

/// SHA-256 over the canonical JSON of the resolved config, followed by the
/// key bundle bytes when one is supplied.
pub fn digest(config: &ScenarioConfig, keys: Option<&KeyBundle>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    if let Some(k) = keys {
        h.update(k.to_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the bundle's canonical bytes.
pub fn bundle_digest(keys: &KeyBundle) -> String {
    Sha256::digest(keys.to_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
