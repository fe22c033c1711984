//! Experiment configuration files.
//!
//! A config is a JSON object. Four keys are shared by every subcommand:
//! `subcommand` (optional, must match the one invoked), `phase` (a builtin
//! name or a phase object), `seed` and `out`. Every other key is a knob of
//! the subcommand and is checked against its schema, so misspelled knobs
//! are rejected instead of silently ignored.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use kakeya_lab::phase::PhaseSpec;

#[derive(Debug, Default)]
pub struct Loaded {
    pub phase: Option<PhaseSpec>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    knobs: Map<String, Value>,
}

impl Loaded {
    /// Parses the subcommand's knobs; absent knobs take their defaults.
    pub fn knobs<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(Value::Object(self.knobs.clone())).map_err(|e| anyhow!("config error: {e}"))
    }
}

pub fn load(path: Option<&Path>, command: &str) -> Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text, command)
}

pub fn parse(text: &str, command: &str) -> Result<Loaded> {
    let value: Value = serde_json::from_str(text).map_err(|e| anyhow!("config error: malformed JSON ({e})"))?;
    let Value::Object(mut map) = value else {
        bail!("config error: the config must be a JSON object");
    };
    if let Some(sub) = map.remove("subcommand") {
        match sub.as_str() {
            Some(s) if s == command => {}
            _ => bail!("config error: config is for subcommand {sub}, not `{command}`"),
        }
    }
    let phase = map.remove("phase").map(phase_from_value).transpose()?;
    let seed = match map.remove("seed") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| anyhow!("config error: seed must be a nonnegative integer"))?),
    };
    let out = match map.remove("out") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => bail!("config error: out must be a path string"),
    };
    Ok(Loaded { phase, seed, out, knobs: map })
}

pub fn phase_from_value(v: Value) -> Result<PhaseSpec> {
    match v {
        Value::String(name) => PhaseSpec::builtin(&name).map_err(|e| anyhow!("{e}")),
        other => serde_json::from_value(other).map_err(|e| anyhow!("config error: bad phase ({e})")),
    }
}

/// `--phase` accepts a builtin name, an inline JSON object or a path to a JSON file.
pub fn phase_from_arg(arg: &str) -> Result<PhaseSpec> {
    let trimmed = arg.trim();
    if trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(trimmed).map_err(|e| anyhow!("config error: malformed phase JSON ({e})"))?;
        return phase_from_value(v);
    }
    let path = Path::new(trimmed);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read phase file {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| anyhow!("config error: malformed phase JSON ({e})"))?;
        return phase_from_value(v);
    }
    PhaseSpec::builtin(trimmed).map_err(|e| anyhow!("{e}"))
}
