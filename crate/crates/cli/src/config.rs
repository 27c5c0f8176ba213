//! Pipeline configuration: one TOML document, validated before any stage
//! runs, with `--set path=value` overrides applied to the parsed tree.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sevi_core::brandsem::PROMPT_VERSION;
use sevi_core::geodata::{InputFormat, TablePaths};
use sevi_core::gwr::{BandwidthChoice, EffectiveDof, Kernel};
use sevi_core::indicators::BrandWeights;
use sevi_core::spillover::{Decay, SpilloverConfig};
use sevi_core::{Error, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub indicators: IndicatorConfig,
    #[serde(default)]
    pub spillover: SpilloverSettings,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub gwr: GwrConfig,
    #[serde(default)]
    pub brands: BrandsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default)]
    pub format: InputFormat,
    pub points: PathBuf,
    pub segments: PathBuf,
    pub anchors: PathBuf,
    pub pois: PathBuf,
    pub lbs: PathBuf,
    /// Per-point tier tallies (point_id, n_local, n_global, n_ordinary);
    /// points not listed count as having no decoded brands.
    #[serde(default)]
    pub brand_counts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorConfig {
    pub smoothing_window: usize,
    pub brand_weights: BrandWeights,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            smoothing_window: 5,
            brand_weights: BrandWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpilloverSettings {
    pub threshold_m: f64,
    pub decay: Decay,
    /// Thresholds re-fitted by the robustness suite.
    pub sweep_thresholds: Vec<f64>,
    /// Decay forms re-fitted by the robustness suite.
    pub sweep_decays: Vec<Decay>,
}

impl Default for SpilloverSettings {
    fn default() -> Self {
        SpilloverSettings {
            threshold_m: 2000.0,
            decay: Decay::Gaussian,
            sweep_thresholds: vec![1000.0, 2000.0, 3000.0],
            sweep_decays: Decay::ALL.to_vec(),
        }
    }
}

impl SpilloverSettings {
    pub fn baseline(&self) -> SpilloverConfig {
        SpilloverConfig {
            threshold_m: self.threshold_m,
            decay: self.decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub pca_components: usize,
    /// Buffer radius of the point-to-POI validation join, in meters.
    pub poi_radius_m: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            pca_components: 4,
            poi_radius_m: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum XSource {
    /// Aligned, min-max normalized indicators.
    #[default]
    Normalized,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GwrConfig {
    pub kernel: Kernel,
    pub bandwidth: BandwidthChoice,
    pub x_source: XSource,
    pub dof: EffectiveDof,
}

impl Default for GwrConfig {
    fn default() -> Self {
        GwrConfig {
            kernel: Kernel::Gaussian,
            bandwidth: BandwidthChoice::SelectFixed,
            x_source: XSource::Normalized,
            dof: EffectiveDof::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Offline,
    /// Endpoint, token and model name come from the environment.
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrandsConfig {
    pub backend: Backend,
    pub prompt_version: String,
    pub reference_db: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    /// Concurrent requests for the live backend; offline decoding is sequential.
    pub parallelism: usize,
}

impl Default for BrandsConfig {
    fn default() -> Self {
        BrandsConfig {
            backend: Backend::Offline,
            prompt_version: PROMPT_VERSION.to_string(),
            reference_db: None,
            fixtures: None,
            images: None,
            ground_truth: None,
            parallelism: 4,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut tree: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("config is not valid TOML: {e}")))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        let config: PipelineConfig = toml::Value::Table(tree)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.indicators.smoothing_window;
        if w == 0 || w.is_multiple_of(2) {
            return Err(Error::Config(format!("indicators.smoothing_window must be odd and >= 1, got {w}")));
        }
        self.indicators.brand_weights.validate()?;
        self.spillover.baseline().validate()?;
        if self.spillover.sweep_thresholds.is_empty() || self.spillover.sweep_decays.is_empty() {
            return Err(Error::Config("spillover sweeps need at least one threshold and one decay".into()));
        }
        for &d in &self.spillover.sweep_thresholds {
            SpilloverConfig {
                threshold_m: d,
                decay: self.spillover.decay,
            }
            .validate()?;
        }
        if self.stats.pca_components < 1 || self.stats.pca_components > 9 {
            return Err(Error::Config(format!(
                "stats.pca_components must be between 1 and 9, got {}",
                self.stats.pca_components
            )));
        }
        if !(self.stats.poi_radius_m > 0.0) {
            return Err(Error::Config("stats.poi_radius_m must be positive".into()));
        }
        match self.gwr.bandwidth {
            BandwidthChoice::Fixed(b) if !(b > 0.0 && b.is_finite()) => {
                return Err(Error::Config(format!("gwr fixed bandwidth must be positive, got {b}")))
            }
            BandwidthChoice::Adaptive(m) if m < 2 => {
                return Err(Error::Config(format!("gwr adaptive bandwidth must be >= 2 neighbours, got {m}")))
            }
            _ => {}
        }
        if self.brands.prompt_version != PROMPT_VERSION {
            return Err(Error::Config(format!(
                "brands.prompt_version `{}` does not match the built-in templates (`{PROMPT_VERSION}`)",
                self.brands.prompt_version
            )));
        }
        if self.brands.parallelism == 0 {
            return Err(Error::Config("brands.parallelism must be >= 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the validated configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn table_paths(&self, workdir: &Path) -> TablePaths {
        TablePaths {
            points: workdir.join(&self.input.points),
            segments: workdir.join(&self.input.segments),
            anchors: workdir.join(&self.input.anchors),
            pois: workdir.join(&self.input.pois),
            lbs: workdir.join(&self.input.lbs),
        }
    }
}

/// Sets `a.b.c = value` in the parsed tree. The value is read as a TOML
/// literal when possible (numbers, booleans, arrays, quoted strings) and as a
/// bare string otherwise.
fn apply_override(tree: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` must look like path=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override `{spec}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = tree;
    for k in &keys[..keys.len() - 1] {
        let entry = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{spec}`: `{k}` is not a table")))?;
    }
    node.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
