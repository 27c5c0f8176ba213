//! Run manifest: configuration hash, input checksums and per-stage output
//! checksums, plus verification against a reference manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sevi_core::{Error, Result};

use crate::output::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// File name -> SHA-256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn new(config_hash: String, inputs: BTreeMap<String, String>, stages: Vec<StageRecord>) -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            inputs,
            stages,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: bad manifest: {e}", path.display())))
    }

    /// Checks that every recorded output exists under `dir` with the recorded
    /// checksum. Returns the list of problems.
    pub fn verify_files(&self, dir: &Path) -> Vec<String> {
        let mut problems = Vec::new();
        for stage in &self.stages {
            for (name, sum) in &stage.outputs {
                match std::fs::read(dir.join(name)) {
                    Ok(bytes) if sha256_hex(&bytes) == *sum => {}
                    Ok(_) => problems.push(format!("{}: {name} checksum differs", stage.name)),
                    Err(e) => problems.push(format!("{}: {name}: {e}", stage.name)),
                }
            }
        }
        problems
    }

    /// Differences from `golden` in configuration, inputs, stage order and
    /// output checksums. The tool version is not compared.
    pub fn diff(&self, golden: &Manifest) -> Vec<String> {
        let mut out = Vec::new();
        if self.config_hash != golden.config_hash {
            out.push("config hash differs".to_string());
        }
        diff_maps("input", &self.inputs, &golden.inputs, &mut out);
        let names = |m: &Manifest| m.stages.iter().map(|s| s.name.clone()).collect::<Vec<_>>();
        if names(self) != names(golden) {
            out.push(format!("stages {:?} != golden {:?}", names(self), names(golden)));
        }
        for (a, b) in self.stages.iter().zip(&golden.stages) {
            diff_maps(&a.name, &a.outputs, &b.outputs, &mut out);
        }
        out
    }
}

fn diff_maps(scope: &str, a: &BTreeMap<String, String>, b: &BTreeMap<String, String>, out: &mut Vec<String>) {
    for (k, v) in a {
        match b.get(k) {
            Some(g) if g == v => {}
            Some(_) => out.push(format!("{scope}: {k} checksum differs")),
            None => out.push(format!("{scope}: {k} not in golden manifest")),
        }
    }
    for k in b.keys().filter(|k| !a.contains_key(*k)) {
        out.push(format!("{scope}: {k} missing"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(sum: &str) -> Manifest {
        Manifest::new(
            "cfg".into(),
            BTreeMap::from([("points.csv".into(), "aa".into())]),
            vec![StageRecord {
                name: "ingest".into(),
                outputs: BTreeMap::from([("a.csv".into(), sum.into())]),
            }],
        )
    }

    #[test]
    fn diff_reports_changed_checksums() {
        assert!(manifest("x").diff(&manifest("x")).is_empty());
        let d = manifest("x").diff(&manifest("y"));
        assert_eq!(d, vec!["ingest: a.csv checksum differs".to_string()]);
    }

    #[test]
    fn verify_detects_missing_and_modified_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), b"hello").unwrap();
        let m = manifest(&sha256_hex(b"hello"));
        assert!(m.verify_files(dir.path()).is_empty());
        std::fs::write(dir.path().join("a.csv"), b"hello!").unwrap();
        assert_eq!(m.verify_files(dir.path()).len(), 1);
        std::fs::remove_file(dir.path().join("a.csv")).unwrap();
        assert_eq!(m.verify_files(dir.path()).len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let m = manifest("x");
        assert_eq!(serde_json::from_str::<Manifest>(&m.to_json()).unwrap(), m);
    }
}
