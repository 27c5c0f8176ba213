//! Anchor spillover fields.
//!
//! Each anchor category gets a decay bandwidth equal to the average distance
//! from its members to their nearest same-category neighbour. The field at a
//! location sums the decayed influence of every anchor within the threshold
//! distance `D`:
//!
//! ```text
//! mv(p) = sum_j 1(d_pj <= D) * f(d_pj; sigma_j)
//! ```
//!
//! with `f` one of the three [`Decay`] forms. Linear decay reaches exactly 0 at
//! `D`, so it is continuous at the gate; the gaussian and exponential forms are
//! cut off there.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{kdtree::distance, KdTree, MallAnchor, Planar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    #[default]
    Gaussian,
    Exponential,
    Linear,
}

impl Decay {
    pub const ALL: [Decay; 3] = [Decay::Gaussian, Decay::Exponential, Decay::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Decay::Gaussian => "gaussian",
            Decay::Exponential => "exponential",
            Decay::Linear => "linear",
        }
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Decay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Decay::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown decay `{s}` (gaussian | exponential | linear)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpilloverConfig {
    pub threshold_m: f64,
    pub decay: Decay,
}

impl Default for SpilloverConfig {
    fn default() -> Self {
        SpilloverConfig {
            threshold_m: 2000.0,
            decay: Decay::Gaussian,
        }
    }
}

impl SpilloverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_m > 0.0) {
            return Err(Error::Config(format!("threshold must be > 0, got {}", self.threshold_m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaProvenance {
    Computed,
    Imputed,
}

impl SigmaProvenance {
    pub fn name(self) -> &'static str {
        match self {
            SigmaProvenance::Computed => "computed",
            SigmaProvenance::Imputed => "imputed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub sigma_m: f64,
    pub provenance: SigmaProvenance,
    pub n_anchors: usize,
}

/// Calibrated decay bandwidth per anchor category, ordered by category name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SigmaTable {
    pub entries: BTreeMap<String, SigmaEntry>,
}

impl SigmaTable {
    pub fn sigma(&self, category: &str) -> Result<f64> {
        self.entries
            .get(category)
            .map(|e| e.sigma_m)
            .ok_or_else(|| Error::MissingSigma(category.to_string()))
    }

    /// Copies each anchor's category bandwidth into `sigma_m`.
    pub fn apply(&self, anchors: &mut [MallAnchor]) -> Result<()> {
        for a in anchors {
            a.sigma_m = Some(self.sigma(&a.category)?);
        }
        Ok(())
    }
}

/// Average nearest-neighbour calibration of the per-category bandwidth.
///
/// Categories with fewer than two anchors receive the unweighted mean of the
/// computed category values.
pub fn calibrate_sigma(anchors: &[MallAnchor]) -> Result<SigmaTable> {
    let mut groups: BTreeMap<&str, Vec<[f64; 2]>> = BTreeMap::new();
    for a in anchors {
        groups.entry(a.category.as_str()).or_default().push(a.xy());
    }
    let mut entries = BTreeMap::new();
    let mut computed = Vec::new();
    for (cat, pts) in &groups {
        if pts.len() < 2 {
            continue;
        }
        let tree = KdTree::new(pts.clone());
        let total: f64 = (0..pts.len())
            .map(|k| tree.nearest_excluding(pts[k], Some(k)).map(|(_, d)| d).unwrap_or(0.0))
            .sum();
        let sigma = total / pts.len() as f64;
        if !(sigma > 0.0) {
            return Err(Error::Calibration(format!(
                "category `{cat}` has all anchors at coincident locations (sigma = 0)"
            )));
        }
        computed.push(sigma);
        entries.insert(
            cat.to_string(),
            SigmaEntry {
                sigma_m: sigma,
                provenance: SigmaProvenance::Computed,
                n_anchors: pts.len(),
            },
        );
    }
    if computed.is_empty() {
        return Err(Error::Calibration(
            "no category has at least two anchors; nothing to impute from".into(),
        ));
    }
    let mean = computed.iter().sum::<f64>() / computed.len() as f64;
    for (cat, pts) in &groups {
        if pts.len() < 2 {
            entries.insert(
                cat.to_string(),
                SigmaEntry {
                    sigma_m: mean,
                    provenance: SigmaProvenance::Imputed,
                    n_anchors: pts.len(),
                },
            );
        }
    }
    Ok(SigmaTable { entries })
}

/// Gated decay factor for one anchor at distance `d`.
pub fn decay_value(d: f64, sigma: f64, config: &SpilloverConfig) -> f64 {
    if d > config.threshold_m {
        return 0.0;
    }
    match config.decay {
        Decay::Gaussian => (-(d * d) / (2.0 * sigma * sigma)).exp(),
        Decay::Exponential => (-d / sigma).exp(),
        Decay::Linear => (1.0 - d / config.threshold_m).max(0.0),
    }
}

/// Anchors prepared for repeated field evaluation: a spatial index for the
/// candidate search and per-anchor bandwidths. Summation runs in ascending
/// anchor-id order.
#[derive(Debug, Clone)]
pub struct SpilloverField {
    tree: KdTree,
    sigmas: Vec<f64>,
    /// Position of each anchor in id order.
    rank: Vec<usize>,
}

impl SpilloverField {
    pub fn new(anchors: &[MallAnchor], sigma_table: &SigmaTable) -> Result<Self> {
        let sigmas = anchors
            .iter()
            .map(|a| sigma_table.sigma(&a.category))
            .collect::<Result<Vec<_>>>()?;
        let mut by_id: Vec<usize> = (0..anchors.len()).collect();
        by_id.sort_by(|&a, &b| anchors[a].id.cmp(&anchors[b].id).then(a.cmp(&b)));
        let mut rank = vec![0; anchors.len()];
        for (r, &i) in by_id.iter().enumerate() {
            rank[i] = r;
        }
        Ok(SpilloverField {
            tree: KdTree::from_points(anchors.iter().map(Planar::xy)),
            sigmas,
            rank,
        })
    }

    pub fn value_at(&self, query: [f64; 2], config: &SpilloverConfig) -> f64 {
        // a few ulps of slack so rounding in the squared-distance test never drops a gated anchor
        let search = config.threshold_m * (1.0 + 4.0 * f64::EPSILON);
        let mut candidates = self.tree.within_radius(query, search);
        candidates.sort_unstable_by_key(|&i| self.rank[i]);
        candidates
            .into_iter()
            .map(|i| {
                let d = distance(self.tree.point(i), query);
                // decay_value re-applies the gate independently of the index
                decay_value(d, self.sigmas[i], config)
            })
            .sum()
    }

    pub fn values<P: Planar + Sync>(&self, points: &[P], config: &SpilloverConfig) -> Vec<f64> {
        points.par_iter().map(|p| self.value_at(p.xy(), config)).collect()
    }
}

pub fn field_at<P: Planar>(
    point: &P,
    anchors: &[MallAnchor],
    sigma_table: &SigmaTable,
    config: &SpilloverConfig,
) -> Result<f64> {
    Ok(SpilloverField::new(anchors, sigma_table)?.value_at(point.xy(), config))
}

/// Field values at every point for each threshold in `thresholds`.
pub fn threshold_sweep<P: Planar + Sync>(
    points: &[P],
    anchors: &[MallAnchor],
    sigma_table: &SigmaTable,
    thresholds: &[f64],
    decay: Decay,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let field = SpilloverField::new(anchors, sigma_table)?;
    thresholds
        .iter()
        .map(|&d| {
            let config = SpilloverConfig {
                threshold_m: d,
                decay,
            };
            config.validate()?;
            Ok((d, field.values(points, &config)))
        })
        .collect()
}
