use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_brand, BrandTier, ReferenceDb};
use crate::error::{Error, Result};

/// Per-image sets of (normalized brand, tier) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    images: BTreeMap<String, BTreeSet<(String, BrandTier)>>,
}

impl LabelSet {
    /// Records an image even if it has no brands.
    pub fn register(&mut self, image_id: &str) {
        self.images.entry(image_id.to_string()).or_default();
    }

    pub fn insert(&mut self, image_id: &str, brand: &str, tier: BrandTier) {
        self.images
            .entry(image_id.to_string())
            .or_default()
            .insert((normalize_brand(brand), tier));
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &String> {
        self.images.keys()
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn pairs(&self, image_id: &str) -> Option<&BTreeSet<(String, BrandTier)>> {
        self.images.get(image_id)
    }

    /// Maps every brand through the reference database's canonical names.
    pub fn canonicalized(&self, db: &ReferenceDb) -> LabelSet {
        let images = self
            .images
            .iter()
            .map(|(id, pairs)| (id.clone(), pairs.iter().map(|(b, t)| (db.canonicalize(b), *t)).collect()))
            .collect();
        LabelSet { images }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl TierMetrics {
    /// A ratio with an empty denominator is 1 when the other side is empty
    /// too (nothing to find, nothing claimed) and 0 otherwise.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = if tp + fp == 0 {
            if fn_ == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            if fp == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        TierMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            tp,
            fp,
            fn_,
        }
    }

    /// Metrics from published precision and recall (counts unknown).
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        TierMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            tp: 0,
            fp: 0,
            fn_: 0,
        }
    }

    pub fn gt_count(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl OverallMetrics {
    /// Unweighted mean of the tier rows.
    pub fn mean_of(rows: &[TierMetrics]) -> Self {
        let n = rows.len() as f64;
        OverallMetrics {
            precision: rows.iter().map(|r| r.precision).sum::<f64>() / n,
            recall: rows.iter().map(|r| r.recall).sum::<f64>() / n,
            f1: rows.iter().map(|r| r.f1).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_images: usize,
    /// International, Ordinary, Local.
    pub tiers: Vec<(BrandTier, TierMetrics)>,
    pub overall: OverallMetrics,
}

impl EvalReport {
    pub fn tier(&self, tier: BrandTier) -> &TierMetrics {
        &self.tiers.iter().find(|(t, _)| *t == tier).expect("all tiers present").1
    }

    /// Plain-text table in the usual tier / metric layout.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<14}{:>9}{:>11}{:>9}{:>9}\n", "Brand type", "GT", "Precision", "Recall", "F1");
        for (tier, m) in &self.tiers {
            s.push_str(&format!(
                "{:<14}{:>9}{:>11.3}{:>9.3}{:>9.3}\n",
                tier.name(),
                m.gt_count(),
                m.precision,
                m.recall,
                m.f1
            ));
        }
        s.push_str(&format!(
            "{:<14}{:>9}{:>11.3}{:>9.3}{:>9.3}\n",
            "Overall",
            "",
            self.overall.precision,
            self.overall.recall,
            self.overall.f1
        ));
        s
    }
}

/// Per-tier set matching of predicted against ground-truth (brand, tier)
/// pairs. A pair predicted with the wrong tier is a false positive for the
/// predicted tier and a miss for the true one.
pub fn evaluate(predictions: &LabelSet, ground_truth: &LabelSet) -> Result<EvalReport> {
    let pred_ids: BTreeSet<&String> = predictions.images.keys().collect();
    let gt_ids: BTreeSet<&String> = ground_truth.images.keys().collect();
    if pred_ids != gt_ids {
        let only_pred: Vec<&&String> = pred_ids.difference(&gt_ids).take(5).collect();
        let only_gt: Vec<&&String> = gt_ids.difference(&pred_ids).take(5).collect();
        return Err(Error::Evaluation(format!(
            "image ids differ: only in predictions {only_pred:?}, only in ground truth {only_gt:?}"
        )));
    }
    let mut counts: BTreeMap<BrandTier, (u64, u64, u64)> = BrandTier::ALL.iter().map(|t| (*t, (0, 0, 0))).collect();
    for (id, gt) in &ground_truth.images {
        let pred = &predictions.images[id];
        for pair in pred {
            let c = counts.get_mut(&pair.1).expect("tier");
            if gt.contains(pair) {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
        for pair in gt.difference(pred) {
            counts.get_mut(&pair.1).expect("tier").2 += 1;
        }
    }
    let tiers: Vec<(BrandTier, TierMetrics)> = BrandTier::ALL
        .iter()
        .map(|t| {
            let (tp, fp, fn_) = counts[t];
            (*t, TierMetrics::from_counts(tp, fp, fn_))
        })
        .collect();
    let overall = OverallMetrics::mean_of(&tiers.iter().map(|(_, m)| *m).collect::<Vec<_>>());
    Ok(EvalReport {
        n_images: ground_truth.len(),
        tiers,
        overall,
    })
}

/// Reads `image_id,brand,tier` (other columns ignored). A row with empty
/// brand and tier registers an image without brands.
pub fn read_labels_csv<R: Read>(reader: R, file_label: &str) -> Result<LabelSet> {
    let mut rdr = csv::Reader::from_reader(reader);
    let schema = |row: usize, column: &str, message: String| Error::Schema {
        file: file_label.to_string(),
        row,
        column: column.to_string(),
        message,
    };
    let headers = rdr.headers().map_err(|e| schema(0, "header", e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(0, name, "missing column".into()))
    };
    let (ci, cb, ct) = (col("image_id")?, col("brand")?, col("tier")?);
    let mut labels = LabelSet::default();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| schema(row, "record", e.to_string()))?;
        let get = |c: usize| rec.get(c).unwrap_or("").trim();
        let image = get(ci);
        if image.is_empty() {
            return Err(schema(row, "image_id", "empty image id".into()));
        }
        let (brand, tier) = (get(cb), get(ct));
        match (brand.is_empty(), tier.is_empty()) {
            (true, true) => labels.register(image),
            (false, false) => {
                let tier: BrandTier = tier.parse().map_err(|e| schema(row, "tier", e))?;
                labels.insert(image, brand, tier);
            }
            _ => return Err(schema(row, "brand/tier", "brand and tier must both be set or both empty".into())),
        }
    }
    Ok(labels)
}

pub fn read_labels(path: &Path) -> Result<LabelSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels_csv(file, &path.display().to_string())
}

pub fn write_labels_csv<W: Write>(writer: W, labels: &LabelSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Config(format!("cannot write labels: {e}"));
    w.write_record(["image_id", "brand", "tier"]).map_err(err)?;
    for (id, pairs) in &labels.images {
        if pairs.is_empty() {
            w.write_record([id.as_str(), "", ""]).map_err(err)?;
        }
        for (b, t) in pairs {
            w.write_record([id.as_str(), b.as_str(), t.name()]).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("cannot write labels: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(rows: &[(&str, &str, BrandTier)]) -> LabelSet {
        let mut l = LabelSet::default();
        for (i, b, t) in rows {
            l.insert(i, b, *t);
        }
        l
    }

    #[test]
    fn perfect_predictions() {
        use BrandTier::*;
        let gt = labels(&[("1", "KFC", International), ("1", "Luckin", Local), ("2", "Shop", Ordinary)]);
        let r = evaluate(&gt, &gt).unwrap();
        for (_, m) in &r.tiers {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.overall.f1, 1.0);
    }

    #[test]
    fn hand_counted_mix() {
        use BrandTier::*;
        let gt = labels(&[("1", "KFC", International), ("1", "Luckin", Local), ("2", "Muji", International)]);
        let mut pred = labels(&[("1", "kfc ", International), ("1", "Luckin", International)]);
        pred.register("2");
        let r = evaluate(&pred, &gt).unwrap();
        let intl = r.tier(International);
        assert_eq!((intl.tp, intl.fp, intl.fn_), (1, 1, 1));
        assert_eq!(intl.precision, 0.5);
        let local = r.tier(Local);
        assert_eq!((local.tp, local.fp, local.fn_), (0, 0, 1));
        assert_eq!((local.precision, local.recall, local.f1), (0.0, 0.0, 0.0));
        let ord = r.tier(Ordinary);
        assert_eq!((ord.precision, ord.recall), (1.0, 1.0));
    }

    #[test]
    fn image_mismatch_is_an_error() {
        let a = labels(&[("1", "KFC", BrandTier::International)]);
        let b = labels(&[("2", "KFC", BrandTier::International)]);
        assert!(matches!(evaluate(&a, &b), Err(Error::Evaluation(_))));
    }

    #[test]
    fn published_pairs_give_published_f1() {
        let m = TierMetrics::from_precision_recall(0.802, 0.737);
        assert!((m.f1 - 0.768).abs() < 0.001);
    }

    #[test]
    fn canonicalization_through_database() {
        let db = ReferenceDb::from_json(r#"{"Starbucks": {"tier": "International", "aliases": ["星巴克"]}}"#).unwrap();
        let gt = labels(&[("1", "Starbucks", BrandTier::International)]);
        let pred = labels(&[("1", "星巴克", BrandTier::International)]);
        assert_eq!(evaluate(&pred.canonicalized(&db), &gt.canonicalized(&db)).unwrap().overall.f1, 1.0);
    }

    #[test]
    fn csv_round_trip_with_brandless_image() {
        let text = "image_id,brand,tier\n1,KFC,International Brand\n2,,\n";
        let l = read_labels_csv(text.as_bytes(), "gt.csv").unwrap();
        assert_eq!(l.len(), 2);
        assert!(l.pairs("2").unwrap().is_empty());
        let mut out = Vec::new();
        write_labels_csv(&mut out, &l).unwrap();
        assert_eq!(read_labels_csv(out.as_slice(), "x").unwrap(), l);
        assert!(read_labels_csv("image_id,brand,tier\n1,KFC,\n".as_bytes(), "gt.csv").is_err());
        assert!(read_labels_csv("image_id,brand\n1,KFC\n".as_bytes(), "gt.csv").is_err());
    }

    fn arb_labels() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
        prop::collection::vec((0u8..4, 0u8..6, 0u8..3), 0..20)
    }

    fn build(rows: &[(u8, u8, u8)]) -> LabelSet {
        let mut l = LabelSet::default();
        for i in 0..4 {
            l.register(&i.to_string());
        }
        for (i, b, t) in rows {
            l.insert(&i.to_string(), &format!("b{b}"), BrandTier::ALL[*t as usize]);
        }
        l
    }

    proptest! {
        #[test]
        fn metrics_are_bounded_and_harmonic(p in arb_labels(), g in arb_labels()) {
            let r = evaluate(&build(&p), &build(&g)).unwrap();
            for (_, m) in &r.tiers {
                prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall));
                let h = if m.precision + m.recall == 0.0 { 0.0 } else { 2.0 * m.precision * m.recall / (m.precision + m.recall) };
                prop_assert!((m.f1 - h).abs() < 1e-9);
            }
        }

        #[test]
        fn correct_additions_never_lower_recall(p in arb_labels(), g in prop::collection::vec((0u8..4, 0u8..6, 0u8..3), 1..20), pick in 0usize..100) {
            let gt = build(&g);
            let before = evaluate(&build(&p), &gt).unwrap();
            let extra = g[pick % g.len()];
            let mut p2 = p.clone();
            p2.push(extra);
            let after = evaluate(&build(&p2), &gt).unwrap();
            let t = BrandTier::ALL[extra.2 as usize];
            prop_assert!(after.tier(t).recall >= before.tier(t).recall);
        }

        #[test]
        fn wrong_additions_never_raise_precision(p in arb_labels(), g in arb_labels(), img in 0u8..4, t in 0u8..3) {
            let gt = build(&g);
            let before = evaluate(&build(&p), &gt).unwrap();
            let mut p2 = p.clone();
            p2.push((img, 99, t));
            let after = evaluate(&build(&p2), &gt).unwrap();
            let tier = BrandTier::ALL[t as usize];
            prop_assert!(after.tier(tier).precision <= before.tier(tier).precision);
        }
    }
}
