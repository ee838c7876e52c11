//! Output files plus a manifest of config, seeds, versions and sha256
//! hashes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::scenarios::ScenarioOutput;
use crate::{Result, RunError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    pub started_utc: String,
    pub finished_utc: String,
    /// File name to lowercase hex sha256.
    pub hashes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("xprun".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("qchain-core".to_string(), qchain::VERSION.to_string()),
        ("prng".to_string(), qchain::noise::PRNG_NAME.to_string()),
    ])
}

/// Writes every output file and the manifest into `dir`. Existing files are
/// only replaced with `force`.
pub fn export(
    output: &ScenarioOutput,
    config: &ExperimentConfig,
    started_utc: String,
    dir: &Path,
    force: bool,
) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let names = output
        .files
        .iter()
        .map(|(n, _)| n.as_str())
        .chain(std::iter::once(MANIFEST_FILE));
    if !force {
        for name in names {
            let p = dir.join(name);
            if p.exists() {
                return Err(RunError::Exists(p.display().to_string()));
            }
        }
    }
    let mut hashes = BTreeMap::new();
    for (name, bytes) in &output.files {
        std::fs::write(dir.join(name), bytes)?;
        hashes.insert(name.clone(), sha256_hex(bytes));
    }
    let manifest = RunManifest {
        config: config.clone(),
        seeds: output.seeds.clone(),
        versions: versions(),
        started_utc,
        finished_utc: now_utc(),
        hashes,
    };
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

pub fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Files in `dir` whose hash differs from the manifest (or that are missing).
pub fn verify(dir: &Path) -> Result<Vec<String>> {
    let manifest = RunManifest::load(&dir.join(MANIFEST_FILE))?;
    let mut bad = Vec::new();
    for (name, want) in &manifest.hashes {
        match std::fs::read(dir.join(name)) {
            Ok(bytes) if &sha256_hex(&bytes) == want => {}
            _ => bad.push(name.clone()),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    fn output() -> ScenarioOutput {
        ScenarioOutput {
            files: vec![("a.csv".into(), b"time_us\n0\n".to_vec())],
            seeds: vec![1, 2],
            checks: vec![],
            summary: serde_json::Value::Null,
        }
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn overwrite_needs_force_and_flip_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(Scenario::SingleQubit).resolve();
        let m = export(&output(), &cfg, now_utc(), dir.path(), false).unwrap();
        assert_eq!(m.seeds, vec![1, 2]);
        assert!(verify(dir.path()).unwrap().is_empty());
        assert!(matches!(
            export(&output(), &cfg, now_utc(), dir.path(), false),
            Err(RunError::Exists(_))
        ));
        export(&output(), &cfg, now_utc(), dir.path(), true).unwrap();
        let p = dir.path().join("a.csv");
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[3] ^= 1;
        std::fs::write(&p, bytes).unwrap();
        assert_eq!(verify(dir.path()).unwrap(), vec!["a.csv".to_string()]);
        let back = RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back.config, cfg);
    }
}
