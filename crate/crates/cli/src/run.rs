//! Config loading, path and seed resolution, manifests.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::Outputs;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// Artifacts were written but a quality gate failed.
    Gate(String),
}

pub trait Command: Serialize + DeserializeOwned {
    const NAME: &'static str;

    fn schema_version(&self) -> u32;
    fn out_mut(&mut self) -> &mut Option<PathBuf>;
    /// Make every input path absolute, relative to `base`.
    fn resolve_paths(&mut self, base: &Path);
    /// Apply a seed override and return the effective seed, if the command
    /// uses one.
    fn apply_seed(&mut self, seed: Option<u64>) -> Option<u64>;
    fn run(&self, out: &mut Outputs) -> CliResult<Status>;
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
}

pub fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = base.join(p);
    std::path::absolute(&joined).unwrap_or(joined)
}

pub fn read_json_value(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Schema { path: ".".into(), message: format!("{}: {e}", path.display()) })
}

pub fn parse<T: DeserializeOwned>(value: Value) -> CliResult<T> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Schema { path: e.path().to_string(), message: e.inner().to_string() })
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    parse(read_json_value(&dir.join(MANIFEST))?)
}

/// Parse, resolve and run one command, then write its manifest. Any error
/// removes the artifacts written so far.
pub fn execute<C: Command>(
    config: Value,
    base: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> CliResult<Status> {
    let mut cfg: C = parse(config)?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(CliError::Version { found: cfg.schema_version(), expected: SCHEMA_VERSION });
    }
    cfg.resolve_paths(base);
    if let Some(o) = out {
        *cfg.out_mut() = Some(o);
    }
    let dir = match cfg.out_mut().take() {
        Some(d) => absolute(base, &d),
        None => return Err(CliError::Usage("no output directory: pass --out or set `out`".into())),
    };
    *cfg.out_mut() = Some(dir.clone());
    let seed = cfg.apply_seed(seed);

    let mut outputs = Outputs::create(&dir)?;
    let result = cfg.run(&mut outputs).and_then(|status| {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: C::NAME.to_string(),
            version: nvhmeta::VERSION.to_string(),
            seed,
            config: serde_json::to_value(&cfg)?,
        };
        outputs.json(MANIFEST, &manifest)?;
        Ok(status)
    });
    if result.is_err() {
        outputs.cleanup();
    }
    result
}
