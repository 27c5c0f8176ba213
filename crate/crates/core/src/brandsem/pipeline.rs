use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::client::{ModelClient, ModelRequest, Stage};
use super::eval::LabelSet;
use super::parse::{parse_s1, parse_s2};
use super::prompts::{dedup_brands, s1_prompt, s2_prompt};
use super::{normalize_brand, BrandTier, ReferenceDb};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ReferenceDb,
    Model,
    /// Neither the database nor the model resolved the brand.
    Default,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::ReferenceDb => "reference_db",
            Provenance::Model => "model",
            Provenance::Default => "default",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// Brand text as extracted.
    pub raw: String,
    /// Canonical database name, or the trimmed raw text.
    pub brand: String,
    pub tier: BrandTier,
    pub provenance: Provenance,
    /// Set when the tier is the Ordinary fallback for an unresolved brand.
    pub flagged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierAssignment {
    pub assignments: Vec<Assignment>,
    pub model_calls: usize,
}

/// Tiers for `raw_brands`: database matches first, then one batched
/// stage-two call for the rest; anything still unknown becomes a flagged
/// Ordinary. Returns one assignment per input, in input order.
pub fn classify(raw_brands: &[String], db: &ReferenceDb, client: &dyn ModelClient) -> Result<TierAssignment> {
    let pending: Vec<String> = dedup_brands(
        &raw_brands
            .iter()
            .filter(|b| db.lookup(b).is_none() && !b.trim().is_empty())
            .cloned()
            .collect::<Vec<_>>(),
    );
    let mut model_tiers: HashMap<String, BrandTier> = HashMap::new();
    let mut model_calls = 0;
    if !pending.is_empty() {
        let request = ModelRequest::new(Stage::S2, None, s2_prompt(db, &pending));
        let reply = client.complete(&request)?;
        model_calls += 1;
        for (brand, tier) in parse_s2(&reply)? {
            model_tiers.insert(normalize_brand(&brand), tier);
        }
    }
    let assignments = raw_brands
        .iter()
        .map(|raw| {
            if let Some((canonical, tier)) = db.lookup(raw) {
                return Assignment {
                    raw: raw.clone(),
                    brand: canonical.to_string(),
                    tier,
                    provenance: Provenance::ReferenceDb,
                    flagged: false,
                };
            }
            match model_tiers.get(&normalize_brand(raw)) {
                Some(&tier) => Assignment {
                    raw: raw.clone(),
                    brand: raw.trim().to_string(),
                    tier,
                    provenance: Provenance::Model,
                    flagged: false,
                },
                None => {
                    log::warn!("brand `{raw}` unresolved; defaulting to Ordinary");
                    Assignment {
                        raw: raw.clone(),
                        brand: raw.trim().to_string(),
                        tier: BrandTier::Ordinary,
                        provenance: Provenance::Default,
                        flagged: true,
                    }
                }
            }
        })
        .collect();
    Ok(TierAssignment {
        assignments,
        model_calls,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub image_id: String,
    pub image_ref: String,
    /// Sampling point the image was taken at, when known.
    pub point_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDecode {
    pub image_id: String,
    pub point_id: Option<String>,
    pub summary: String,
    pub assignments: Vec<Assignment>,
}

pub fn decode_image(image: &ImageRef, db: &ReferenceDb, client: &dyn ModelClient) -> Result<ImageDecode> {
    let request = ModelRequest::new(Stage::S1, Some(image.image_ref.clone()), s1_prompt(&image.image_ref));
    let s1 = parse_s1(&client.complete(&request)?)?;
    let tiers = classify(&s1.brands_found, db, client)?;
    Ok(ImageDecode {
        image_id: image.image_id.clone(),
        point_id: image.point_id.clone(),
        summary: s1.summary,
        assignments: tiers.assignments,
    })
}

/// Decodes every image, in input order. With `parallelism > 1` requests run
/// on a bounded worker pool; output order is unaffected.
pub fn decode_corpus(
    images: &[ImageRef],
    db: &ReferenceDb,
    client: &dyn ModelClient,
    parallelism: usize,
) -> Result<Vec<ImageDecode>> {
    let one = |img: &ImageRef| {
        decode_image(img, db, client).inspect_err(|e| log::error!("image `{}`: {e}", img.image_id))
    };
    if parallelism <= 1 {
        return images.iter().map(one).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("cannot start decode workers: {e}")))?;
    pool.install(|| images.par_iter().map(one).collect())
}

#[derive(Debug, Deserialize)]
struct ImageRow {
    image_id: String,
    image_ref: String,
    #[serde(default)]
    point_id: Option<String>,
}

/// Reads `image_id,image_ref[,point_id]`.
pub fn read_images_csv<R: Read>(reader: R, file_label: &str) -> Result<Vec<ImageRef>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, row) in rdr.deserialize::<ImageRow>().enumerate() {
        let row = row.map_err(|e| Error::Schema {
            file: file_label.to_string(),
            row: i + 1,
            column: "image_id/image_ref".into(),
            message: e.to_string(),
        })?;
        if !seen.insert(row.image_id.clone()) {
            return Err(Error::Integrity {
                file: file_label.to_string(),
                row: i + 1,
                message: format!("duplicate image_id `{}`", row.image_id),
            });
        }
        out.push(ImageRef {
            image_id: row.image_id,
            image_ref: row.image_ref,
            point_id: row.point_id.filter(|p| !p.is_empty()),
        });
    }
    Ok(out)
}

/// One row per assignment; an image without brands gets a single row with
/// empty brand and tier so it still registers in evaluation.
pub fn write_decoded_csv<W: Write>(writer: W, decodes: &[ImageDecode]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Config(format!("cannot write decoded brands: {e}"));
    w.write_record(["image_id", "point_id", "brand", "tier", "provenance", "flagged", "raw"])
        .map_err(io)?;
    for d in decodes {
        let point = d.point_id.as_deref().unwrap_or("");
        if d.assignments.is_empty() {
            w.write_record([d.image_id.as_str(), point, "", "", "", "", ""]).map_err(io)?;
        }
        for a in &d.assignments {
            w.write_record([
                d.image_id.as_str(),
                point,
                a.brand.as_str(),
                a.tier.name(),
                a.provenance.name(),
                if a.flagged { "1" } else { "0" },
                a.raw.as_str(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("cannot write decoded brands: {e}")))?;
    Ok(())
}

pub fn predictions_to_labels(decodes: &[ImageDecode]) -> LabelSet {
    let mut labels = LabelSet::default();
    for d in decodes {
        labels.register(&d.image_id);
        for a in &d.assignments {
            labels.insert(&d.image_id, &a.brand, a.tier);
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brandsem::client::{OfflineClient, RecordingClient};
    use crate::brandsem::tests::sample_db;
    use std::collections::BTreeMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);
    impl ModelClient for Counting {
        fn complete(&self, _: &ModelRequest) -> Result<String> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(Error::Transport("should not be called".into()))
        }
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn alias_resolves_without_client() {
        let client = Counting(AtomicUsize::new(0));
        let t = classify(&strings(&["星巴克", "corner  store"]), &sample_db(), &client).unwrap();
        assert_eq!(client.0.load(Ordering::SeqCst), 0);
        assert_eq!(t.assignments[0].brand, "Starbucks");
        assert_eq!(t.assignments[0].tier, BrandTier::International);
        assert_eq!(t.assignments[1].tier, BrandTier::Ordinary);
        assert!(t.assignments.iter().all(|a| a.provenance == Provenance::ReferenceDb));
    }

    #[test]
    fn empty_input_makes_no_call() {
        let client = Counting(AtomicUsize::new(0));
        let t = classify(&[], &sample_db(), &client).unwrap();
        assert!(t.assignments.is_empty());
        assert_eq!(client.0.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn batched_call_matches_fixture_map() {
        let db = sample_db();
        let raw = strings(&["Luckin", "Muji", "Zara", "Lao Wang Noodles", "Heytea"]);
        let truth = BTreeMap::from([
            ("Luckin", "Local"),
            ("Muji", "International"),
            ("Zara", "International"),
            ("Lao Wang Noodles", "Ordinary"),
            ("Heytea", "Local"),
        ]);
        let req = ModelRequest::new(Stage::S2, None, s2_prompt(&db, &raw));
        let client = OfflineClient::new(BTreeMap::from([(req.hash(), serde_json::to_string(&truth).unwrap())]));
        let t = classify(&raw, &db, &client).unwrap();
        assert_eq!(t.model_calls, 1);
        for a in &t.assignments {
            assert_eq!(a.tier.name(), truth[a.raw.as_str()]);
            assert_eq!(a.provenance, Provenance::Model);
        }
    }

    #[test]
    fn unresolved_become_flagged_ordinary_and_duplicates_are_kept() {
        let rec = RecordingClient::new(|_: &ModelRequest| Ok(r#"{"Luckin": "Local"}"#.to_string()));
        let raw = strings(&["Luckin", "Mystery", "luckin", "Starbucks"]);
        let t = classify(&raw, &sample_db(), &rec).unwrap();
        assert_eq!(t.assignments.len(), 4);
        assert_eq!(t.assignments[1].tier, BrandTier::Ordinary);
        assert!(t.assignments[1].flagged);
        assert_eq!(t.assignments[2].tier, BrandTier::Local);
        assert_eq!(rec.into_fixtures().len(), 1);
    }

    #[test]
    fn malformed_stage_two_is_an_error() {
        let rec = RecordingClient::new(|_: &ModelRequest| Ok("Luckin is local".to_string()));
        assert!(matches!(
            classify(&strings(&["Luckin"]), &sample_db(), &rec),
            Err(Error::ModelParse { .. })
        ));
    }

    #[test]
    fn images_csv_and_decoded_csv() {
        let imgs = read_images_csv("image_id,image_ref,point_id\na,a.jpg,p1\nb,b.jpg,\n".as_bytes(), "images.csv").unwrap();
        assert_eq!(imgs[1].point_id, None);
        assert!(read_images_csv("image_id,image_ref\na,x\na,y\n".as_bytes(), "images.csv").is_err());

        let decodes = vec![ImageDecode {
            image_id: "b".into(),
            point_id: None,
            summary: String::new(),
            assignments: vec![],
        }];
        let mut out = Vec::new();
        write_decoded_csv(&mut out, &decodes).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().nth(1).unwrap(), "b,,,,,,");
    }
}
