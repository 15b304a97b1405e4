use std::path::PathBuf;

use anyhow::{bail, Context};
use boostybe_core::catalog::{self, Family};
use boostybe_core::descriptor::ModelDescriptor;
use clap::Args;
use serde_json::{json, Value};

/// A model given as a descriptor file or as `--family` with optional
/// `--params` (a JSON object such as `{"a1": [0.5, 0], "a2": 0.3}`).
/// Without `--params` the family is sampled with the command's seed.
#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    #[arg(long, conflicts_with_all = ["family", "params"])]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, requires = "family")]
    pub params: Option<String>,
}

/// The descriptor plus the raw JSON it was read from, if any.
pub struct Resolved {
    pub descriptor: ModelDescriptor,
    pub raw: Option<Value>,
}

impl ModelArgs {
    pub fn resolve(&self, seed: u64) -> anyhow::Result<Resolved> {
        if let Some(path) = &self.model {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let raw: Value = serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))?;
            let descriptor = ModelDescriptor::from_json(&raw).with_context(|| format!("invalid model in {}", path.display()))?;
            return Ok(Resolved { descriptor, raw: Some(raw) });
        }
        let Some(family) = &self.family else { bail!("give either --model <path> or --family <id>") };
        let family: Family = family.parse()?;
        let descriptor = match &self.params {
            Some(p) => {
                let params: Value = serde_json::from_str(p).context("--params must be a JSON object")?;
                ModelDescriptor::from_json(&json!({ "family": family.id(), "params": params }))?
            }
            None => ModelDescriptor::new(catalog::sample_params(family, seed)),
        };
        Ok(Resolved { descriptor, raw: None })
    }
}

pub fn parse_twist(s: &str) -> Result<(i8, i8), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let sign = |t: &str| match t {
        "1" | "+1" | "+" => Ok(1),
        "-1" | "-" => Ok(-1),
        _ => Err(format!("'{t}' is not a sign (use 1 or -1)")),
    };
    match parts.as_slice() {
        [a, b] => Ok((sign(a)?, sign(b)?)),
        _ => Err("expected two signs such as 1,-1".into()),
    }
}
