//! Run manifests: everything needed to repeat a run, next to its output.
//!
//! No timestamps or host details are recorded, so repeating a run with the
//! same inputs reproduces the manifest byte for byte as well.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Name of the only random generator used by any subcommand.
pub const RNG_NAME: &str = "ChaCha8Rng::seed_from_u64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub subcommand: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    pub inputs: BTreeMap<String, String>,
    pub config: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    pub counts: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub results: BTreeMap<String, Value>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: &[String]) -> Self {
        RunManifest {
            tool: concat!("crossalign ", env!("CARGO_PKG_VERSION")).to_string(),
            subcommand: subcommand.to_string(),
            argv: argv.to_vec(),
            inputs: BTreeMap::new(),
            config: BTreeMap::new(),
            seed: None,
            rng: None,
            counts: BTreeMap::new(),
            results: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> &mut Self {
        self.inputs.insert(name.to_string(), path.display().to_string());
        self
    }

    pub fn config(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.config.insert(name.to_string(), value.into());
        self
    }

    pub fn count(&mut self, name: &str, n: usize) -> &mut Self {
        self.counts.insert(name.to_string(), n);
        self
    }

    pub fn result(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(name.to_string(), value.into());
        self
    }

    pub fn seeded(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self.rng = Some(RNG_NAME.to_string());
        self
    }

    /// Writes `<primary output>.manifest.json` and returns its path.
    pub fn write_beside(&mut self, primary: &Path) -> CliResult<PathBuf> {
        self.outputs = vec![primary.display().to_string()];
        let path = manifest_path(primary);
        let file = File::create(&path).map_err(|e| CliError::io(e.to_string()).in_file(&path))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, self)
            .map_err(|e| CliError::io(e.to_string()).in_file(&path))?;
        writeln!(out)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::io(e.to_string()).in_file(&path))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(e.to_string()).in_file(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::io(format!("not a run manifest: {e}")).in_file(path))
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("scores.txt");
        let mut m = RunManifest::new("sts", &["sts".into(), "--pairs".into(), "p.tsv".into()]);
        m.input("pairs", Path::new("p.tsv")).config("rank_r", 4).count("pairs", 3).seeded(7);
        let path = m.write_beside(&out).unwrap();
        assert_eq!(path, dir.path().join("scores.txt.manifest.json"));
        let back = RunManifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.outputs, [out.display().to_string()]);
        assert_eq!(back.rng.as_deref(), Some(RNG_NAME));
    }
}
