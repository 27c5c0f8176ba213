//! Output files: every write goes through [`OutputDir`], which records the
//! SHA-256 of the bytes for the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sevi_core::geodata::SamplingPoint;
use sevi_core::indicators::IndicatorVector;
use sevi_core::{Error, Result};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Six decimal places, without negative zero.
pub fn f6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Rounds to 9 decimals for JSON so last-bit libm differences do not leak
/// into checksums. Non-finite values become null.
pub fn r9(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    let r = (v * 1e9).round() / 1e9;
    json!(if r == 0.0 { 0.0 } else { r })
}

pub fn r9_opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, r9)
}

/// Applies [`r9`] to every non-integer number in a JSON tree.
pub fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => r9(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root).map_err(|source| Error::Io {
            path: root.clone(),
            source,
        })?;
        Ok(OutputDir {
            root,
            written: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|source| Error::Io { path, source })?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Pretty JSON with floats rounded by [`rounded`].
    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let value = rounded(serde_json::to_value(value).expect("json serializes"));
        let mut bytes = serde_json::to_vec_pretty(&value).expect("json serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes a CSV table from a header and string rows.
    pub fn write_table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Config(format!("cannot encode {name}: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("cannot encode {name}: {e}")))?;
        self.write(name, &bytes)
    }

    /// Checksums of files written since the last call.
    pub fn take_written(&mut self) -> BTreeMap<String, String> {
        std::mem::take(&mut self.written)
    }
}

/// Scores attached to each point's GeoJSON feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScores {
    pub indicators: IndicatorVector,
    pub dims: [f64; 3],
    pub sevi: f64,
}

/// One Point feature per sampling point with the nine indicators, the three
/// dimension scores and SEVI of its segment. Points whose segment has no
/// scores are skipped.
pub fn emit_geojson(points: &[SamplingPoint], scores: &BTreeMap<String, FeatureScores>) -> Value {
    let features: Vec<Value> = points
        .iter()
        .filter_map(|p| {
            let s = scores.get(&p.segment_id)?;
            let mut props = serde_json::Map::new();
            for (name, v) in IndicatorVector::NAMES.iter().zip(s.indicators.to_array()) {
                props.insert(name.to_string(), r9(v));
            }
            for (name, v) in ["A", "U", "P"].iter().zip(s.dims) {
                props.insert(name.to_string(), r9(v));
            }
            props.insert("sevi".into(), r9(s.sevi));
            Some(json!({
                "type": "Feature",
                "id": p.id,
                "geometry": {"type": "Point", "coordinates": [p.lon, p.lat]},
                "properties": Value::Object(props),
            }))
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}
