//! Helpers behind the `sim` binary.

use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Scenario};
use crate::manifest::{export, now_utc, RunManifest};
use crate::scenarios::{run, ScenarioOutput};
use crate::{Result, RunError};

/// Reads a config file, or the config and seeds recorded in a manifest.
pub fn load_config_or_manifest(path: &Path) -> Result<(ExperimentConfig, Option<Vec<u64>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    if value.get("config").is_some() && value.get("hashes").is_some() {
        let m: RunManifest = serde_json::from_value(value)?;
        return Ok((m.config, Some(m.seeds)));
    }
    Ok((ExperimentConfig::from_json(&text)?, None))
}

/// Seeds from a JSON array or whitespace-separated integers.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| RunError::Seeds(e.to_string()));
    }
    text.split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|e| RunError::Seeds(format!("'{s}': {e}")))
        })
        .collect()
}

/// One invocation of `sim`.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub scenario: Scenario,
    pub config: PathBuf,
    pub out: PathBuf,
    pub seeds: Option<PathBuf>,
    pub workers: usize,
    pub force: bool,
    pub lab_frame: bool,
}

/// Runs the scenario and writes its files and manifest.
pub fn execute(inv: &Invocation) -> Result<(ScenarioOutput, RunManifest)> {
    let started = now_utc();
    let (mut config, manifest_seeds) = load_config_or_manifest(&inv.config)?;
    if config.scenario != inv.scenario {
        return Err(RunError::Config(format!(
            "config is for scenario '{}', not '{}'",
            config.scenario, inv.scenario
        )));
    }
    if inv.lab_frame {
        config.lab_frame = Some(true);
    }
    let seeds = match &inv.seeds {
        Some(p) => Some(parse_seeds(&std::fs::read_to_string(p)?)?),
        None => manifest_seeds,
    };
    let resolved = config.resolve();
    let output = run(&resolved, seeds.as_deref(), inv.workers)?;
    let manifest = export(&output, &resolved, started, &inv.out, inv.force)?;
    Ok((output, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_formats() {
        assert_eq!(parse_seeds("[3, 1, 2]").unwrap(), vec![3, 1, 2]);
        assert_eq!(parse_seeds("3\n1 2\n").unwrap(), vec![3, 1, 2]);
        assert!(parse_seeds("3 x").is_err());
    }
}
