//! Two-stage brand decoding: stage one extracts visible brand text from a
//! street-view image, stage two assigns each brand a market tier. A reference
//! database resolves known brands and aliases before any model call.

mod client;
mod eval;
mod parse;
mod pipeline;
mod prompts;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::BrandCounts;

pub use client::{
    GenerationParams, LiveClient, LiveConfig, ModelClient, ModelRequest, OfflineClient, RecordingClient, Stage,
};
pub use eval::{
    evaluate, read_labels, read_labels_csv, write_labels_csv, EvalReport, LabelSet, OverallMetrics, TierMetrics,
};
pub use parse::{parse_model_json, parse_s1, parse_s2, ParsedOutput, S1Response};
pub use pipeline::{
    classify, decode_corpus, decode_image, predictions_to_labels, read_images_csv, write_decoded_csv, Assignment,
    ImageDecode, ImageRef, Provenance, TierAssignment,
};
pub use prompts::{build_prompts, s1_prompt, s2_prompt, EMPTY_DB_MARKER, PROMPT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BrandTier {
    International,
    Local,
    Ordinary,
}

impl BrandTier {
    pub const ALL: [BrandTier; 3] = [BrandTier::International, BrandTier::Ordinary, BrandTier::Local];

    pub fn name(self) -> &'static str {
        match self {
            BrandTier::International => "International",
            BrandTier::Local => "Local",
            BrandTier::Ordinary => "Ordinary",
        }
    }
}

impl fmt::Display for BrandTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BrandTier {
    type Err = String;

    /// Accepts "International" or "International Brand", any case.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let n = normalize_brand(s);
        let n = n.strip_suffix(" brand").unwrap_or(&n);
        match n {
            "international" => Ok(BrandTier::International),
            "local" => Ok(BrandTier::Local),
            "ordinary" => Ok(BrandTier::Ordinary),
            _ => Err(format!("unknown brand tier `{s}`")),
        }
    }
}

/// Case-fold, trim and collapse internal whitespace.
pub fn normalize_brand(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbEntry {
    pub tier: BrandTier,
    #[serde(default)]
    pub aliases: Vec<String>,
}

/// Canonical brand names with tier and aliases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceDb {
    entries: BTreeMap<String, DbEntry>,
    index: HashMap<String, String>,
}

impl ReferenceDb {
    pub fn new(entries: BTreeMap<String, DbEntry>) -> Result<Self> {
        let mut index: HashMap<String, String> = HashMap::new();
        for (canonical, entry) in &entries {
            for name in std::iter::once(canonical).chain(&entry.aliases) {
                let key = normalize_brand(name);
                if key.is_empty() {
                    return Err(Error::ReferenceDb(format!("empty name or alias under `{canonical}`")));
                }
                match index.get(&key) {
                    Some(other) if other != canonical => {
                        return Err(Error::ReferenceDb(format!(
                            "alias `{name}` maps to both `{other}` and `{canonical}`"
                        )))
                    }
                    _ => {
                        index.insert(key, canonical.clone());
                    }
                }
            }
        }
        Ok(ReferenceDb { entries, index })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: BTreeMap<String, DbEntry> =
            serde_json::from_str(text).map_err(|e| Error::ReferenceDb(format!("invalid reference database: {e}")))?;
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::ReferenceDb(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("reference db serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &BTreeMap<String, DbEntry> {
        &self.entries
    }

    /// Canonical name and tier for a brand or alias.
    pub fn lookup(&self, name: &str) -> Option<(&str, BrandTier)> {
        let canonical = self.index.get(&normalize_brand(name))?;
        let entry = &self.entries[canonical];
        Some((canonical.as_str(), entry.tier))
    }

    /// Canonical form for matching: the database name when known, otherwise
    /// the normalized input.
    pub fn canonicalize(&self, name: &str) -> String {
        match self.lookup(name) {
            Some((c, _)) => normalize_brand(c),
            None => normalize_brand(name),
        }
    }
}

/// Tier tally of one set of assignments.
pub fn brand_counts<'a>(assignments: impl IntoIterator<Item = &'a Assignment>) -> BrandCounts {
    let mut c = BrandCounts::default();
    for a in assignments {
        match a.tier {
            BrandTier::International => c.n_global += 1,
            BrandTier::Local => c.n_local += 1,
            BrandTier::Ordinary => c.n_ordinary += 1,
        }
    }
    c
}
