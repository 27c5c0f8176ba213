//! Regenerates the bundled synthetic city and brand corpus.
//!
//! ```text
//! cargo run -p sevi-cli --example make_fixtures -- crates/cli/fixtures/city
//! ```
//!
//! Output is a pure function of the seed below.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use sevi_core::brandsem::{
    decode_corpus, BrandTier, DbEntry, ImageRef, ModelRequest, RecordingClient, ReferenceDb, Stage,
};
use sevi_core::geodata::{
    project_to_metric, unproject, write_anchors_csv, write_lbs_csv, write_points_csv, write_pois_csv,
    write_segments_csv, DetectionCounts, LbsObservation, MallAnchor, Period, PoiRecord, SamplingPoint, StreetSegment,
};
use sevi_core::spillover::{calibrate_sigma, SpilloverConfig, SpilloverField};

const SEED: u64 = 20_241_015;
const CENTER: (f64, f64) = (118.7969, 32.0603);
const COLS: usize = 20;
const ROWS: usize = 10;
const POINTS_PER_SEGMENT: usize = 10;

fn write(path: &Path, bytes: &[u8]) {
    std::fs::write(path, bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).unwrap().sample(rng) as u64
}

struct City {
    points: Vec<SamplingPoint>,
    segments: Vec<StreetSegment>,
    anchors: Vec<MallAnchor>,
    /// Latent commercial intensity per segment, in [0, 1].
    intensity: Vec<f64>,
    /// Latent brand quality per point, in [0, 1].
    quality: Vec<f64>,
}

fn city(rng: &mut ChaCha8Rng) -> City {
    let (cx, cy) = project_to_metric(CENTER.0, CENTER.1).unwrap();
    let (pitch_x, pitch_y) = (500.0, 320.0);
    let origin = (cx - pitch_x * COLS as f64 / 2.0, cy - pitch_y * ROWS as f64 / 2.0);

    let categories = [("regional", 8), ("district", 7), ("community", 4), ("flagship", 1)];
    let mut anchors = Vec::new();
    for (cat, n) in categories {
        for _ in 0..n {
            let x = origin.0 + rng.gen_range(0.5..COLS as f64 - 0.5) * pitch_x;
            let y = origin.1 + rng.gen_range(0.5..ROWS as f64 - 0.5) * pitch_y;
            anchors.push(MallAnchor::at(format!("M{:02}", anchors.len() + 1), cat, x, y));
        }
    }

    let bump = |x: f64, y: f64| -> f64 {
        let near: f64 = anchors
            .iter()
            .map(|a| (-((a.x - x).powi(2) + (a.y - y).powi(2)) / (2.0 * 900.0f64.powi(2))).exp())
            .sum();
        (0.15 + 0.6 * near.min(1.5) / 1.5 + 0.25 * (x - origin.0) / (pitch_x * COLS as f64)).clamp(0.0, 1.0)
    };

    let noise = Normal::new(0.0, 0.08).unwrap();
    let mut points = Vec::new();
    let mut segments = Vec::new();
    let mut intensity = Vec::new();
    let mut quality = Vec::new();
    for r in 0..ROWS {
        for c in 0..COLS {
            let id = format!("S{:03}", segments.len() + 1);
            let length = rng.gen_range(180.0..420.0);
            let x0 = origin.0 + c as f64 * pitch_x + rng.gen_range(-30.0..30.0);
            let y0 = origin.1 + r as f64 * pitch_y + rng.gen_range(-30.0..30.0);
            let angle: f64 = rng.gen_range(-0.3..0.3);
            let level = (bump(x0 + length / 2.0, y0) + noise.sample(rng)).clamp(0.02, 1.0);
            for k in 0..POINTS_PER_SEGMENT {
                let t = (k as f64 + 0.5) / POINTS_PER_SEGMENT as f64 * length;
                let (x, y) = (x0 + t * angle.cos(), y0 + t * angle.sin());
                let local = (level + noise.sample(rng) * 0.5).clamp(0.0, 1.0);
                let signs = [poisson(rng, 0.5 + 9.0 * local), poisson(rng, 0.5 + 9.0 * local)];
                let closed_rate = 0.25 - 0.18 * local;
                let closed = signs.map(|s| (0..s).filter(|_| rng.gen_bool(closed_rate)).count() as u64);
                let total = [1_000_000u64, 1_000_000];
                let green = total.map(|t| (t as f64 * rng.gen_range(0.05..0.25) * (1.2 - local)) as u64);
                let d = DetectionCounts::from_array([
                    signs[0],
                    signs[1],
                    closed[0],
                    closed[1],
                    poisson(rng, 0.3 + 4.0 * local),
                    poisson(rng, 0.3 + 4.0 * local),
                    poisson(rng, 0.5 + 12.0 * local),
                    poisson(rng, 0.5 + 12.0 * local),
                    poisson(rng, 2.0 + 3.0 * (1.0 - local)),
                    poisson(rng, 2.0 + 3.0 * (1.0 - local)),
                    poisson(rng, 1.0 + 5.0 * local),
                    poisson(rng, 1.0 + 5.0 * local),
                    green[0],
                    green[1],
                    total[0],
                    total[1],
                ]);
                let (lon, lat) = unproject(x, y);
                let lon = (lon * 1e7).round() / 1e7;
                let lat = (lat * 1e7).round() / 1e7;
                points.push(SamplingPoint::new(format!("{id}-P{k:02}"), lon, lat, id.clone(), k as u32, d).unwrap());
                quality.push((local + noise.sample(rng)).clamp(0.0, 1.0));
            }
            segments.push(StreetSegment {
                id,
                length_m: (length * 10.0).round() / 10.0,
                point_ids: Vec::new(),
            });
            intensity.push(level);
        }
    }
    let anchors = anchors
        .into_iter()
        .map(|a| {
            let lon = (a.lon * 1e7).round() / 1e7;
            let lat = (a.lat * 1e7).round() / 1e7;
            let (x, y) = project_to_metric(lon, lat).unwrap();
            MallAnchor::at(a.id, a.category, x, y)
        })
        .collect();
    City {
        points,
        segments,
        anchors,
        intensity,
        quality,
    }
}

/// Brand tallies per point: a share of the signboards carries a recognized
/// brand, with better-quality locations leaning to higher tiers.
fn brand_counts(rng: &mut ChaCha8Rng, city: &City) -> String {
    let mut out = String::from("point_id,n_local,n_global,n_ordinary\n");
    for (p, &q) in city.points.iter().zip(&city.quality) {
        let (mut l, mut g, mut o) = (0, 0, 0);
        for _ in 0..p.detections.signboards() {
            if !rng.gen_bool(0.4 + 0.4 * q) {
                continue;
            }
            let u: f64 = rng.gen();
            if u < 0.1 + 0.45 * q {
                g += 1;
            } else if u < 0.35 + 0.5 * q {
                l += 1;
            } else {
                o += 1;
            }
        }
        out.push_str(&format!("{},{l},{g},{o}\n", p.id));
    }
    out
}

/// POIs scattered within 45 m of points; density and premium share rise
/// with brand quality. A few points get none.
fn pois(rng: &mut ChaCha8Rng, city: &City) -> Vec<PoiRecord> {
    let cats = ["catering", "shopping", "leisure", "life_services"];
    let mut out = Vec::new();
    for (p, &q) in city.points.iter().zip(&city.quality) {
        for _ in 0..poisson(rng, 0.3 + 6.0 * q) {
            let r = 45.0 * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let (lon, lat) = unproject(p.x + r * a.cos(), p.y + r * a.sin());
            let (x, y) = project_to_metric((lon * 1e7).round() / 1e7, (lat * 1e7).round() / 1e7).unwrap();
            let cat = cats[rng.gen_range(0..cats.len())];
            out.push(PoiRecord::at(format!("POI{:05}", out.len() + 1), x, y, cat, rng.gen_bool(0.05 + 0.45 * q)));
        }
    }
    out
}

/// Crowd intensity per segment and period: a spatially varying response to
/// commercial intensity plus the spillover field, with period-specific
/// amplitude and noise. Morning peaks are dominated by commuting noise.
fn lbs(rng: &mut ChaCha8Rng, city: &City) -> Vec<LbsObservation> {
    let sigma = calibrate_sigma(&city.anchors).unwrap();
    let field = SpilloverField::new(&city.anchors, &sigma).unwrap();
    let mv = field.values(&city.points, &SpilloverConfig::default());
    let mut seg_mv = vec![0.0; city.segments.len()];
    let mut seg_x = vec![0.0; city.segments.len()];
    for (i, (p, v)) in city.points.iter().zip(&mv).enumerate() {
        seg_mv[i / POINTS_PER_SEGMENT] += v / POINTS_PER_SEGMENT as f64;
        seg_x[i / POINTS_PER_SEGMENT] += p.x / POINTS_PER_SEGMENT as f64;
    }
    let max_mv = seg_mv.iter().cloned().fold(0.0, f64::max);
    let (xmin, xmax) = seg_x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let periods: [(Period, f64, f64); 8] = [
        (Period::WeekdayMorning, 0.7, 0.30),
        (Period::WeekdayMidday, 1.0, 0.12),
        (Period::WeekdayEvening, 1.1, 0.16),
        (Period::WeekdayNight, 0.6, 0.18),
        (Period::WeekendMorning, 0.6, 0.26),
        (Period::WeekendMidday, 1.2, 0.13),
        (Period::WeekendEvening, 1.3, 0.16),
        (Period::WeekendNight, 0.7, 0.18),
    ];
    let mut out = Vec::new();
    for (s, seg) in city.segments.iter().enumerate() {
        let east = (seg_x[s] - xmin) / (xmax - xmin);
        let slope = 0.6 + 0.8 * east;
        let base = 0.2 + slope * city.intensity[s] + 0.5 * seg_mv[s] / max_mv;
        for &(period, amp, noise) in &periods {
            let e = Normal::new(0.0, noise).unwrap().sample(rng);
            let uv = (1000.0 * amp * (base + e)).max(1.0);
            out.push(LbsObservation {
                segment_id: seg.id.clone(),
                period,
                uv: uv.round(),
            });
        }
    }
    out
}

struct Brand {
    name: &'static str,
    tier: BrandTier,
    aliases: &'static [&'static str],
    in_db: bool,
}

const BRANDS: &[Brand] = &[
    Brand { name: "Starbucks", tier: BrandTier::International, aliases: &["星巴克"], in_db: true },
    Brand { name: "McDonald's", tier: BrandTier::International, aliases: &["麦当劳", "McDonalds"], in_db: true },
    Brand { name: "KFC", tier: BrandTier::International, aliases: &["肯德基"], in_db: true },
    Brand { name: "Uniqlo", tier: BrandTier::International, aliases: &["优衣库"], in_db: true },
    Brand { name: "Nike", tier: BrandTier::International, aliases: &[], in_db: true },
    Brand { name: "Luckin Coffee", tier: BrandTier::Local, aliases: &["瑞幸咖啡", "Luckin"], in_db: true },
    Brand { name: "Heytea", tier: BrandTier::Local, aliases: &["喜茶"], in_db: true },
    Brand { name: "Nanjing Dapaidang", tier: BrandTier::Local, aliases: &["南京大牌档"], in_db: true },
    Brand { name: "Mixue", tier: BrandTier::Local, aliases: &["蜜雪冰城"], in_db: true },
    Brand { name: "Convenience Store", tier: BrandTier::Ordinary, aliases: &["便利店"], in_db: true },
    Brand { name: "Fruit Shop", tier: BrandTier::Ordinary, aliases: &["水果店"], in_db: true },
    Brand { name: "Muji", tier: BrandTier::International, aliases: &[], in_db: false },
    Brand { name: "Sephora", tier: BrandTier::International, aliases: &[], in_db: false },
    Brand { name: "Costa Coffee", tier: BrandTier::International, aliases: &[], in_db: false },
    Brand { name: "Adidas", tier: BrandTier::International, aliases: &[], in_db: false },
    Brand { name: "Jinling Bakery", tier: BrandTier::Local, aliases: &[], in_db: false },
    Brand { name: "Xinjiekou Duck Blood Soup", tier: BrandTier::Local, aliases: &[], in_db: false },
    Brand { name: "Qinhuai Tea House", tier: BrandTier::Local, aliases: &[], in_db: false },
    Brand { name: "Wang's Noodles", tier: BrandTier::Ordinary, aliases: &[], in_db: false },
    Brand { name: "Li Family Tailor", tier: BrandTier::Ordinary, aliases: &[], in_db: false },
    Brand { name: "Happy Hair Salon", tier: BrandTier::Ordinary, aliases: &[], in_db: false },
    Brand { name: "Golden Key Locksmith", tier: BrandTier::Ordinary, aliases: &[], in_db: false },
];

/// Spurious brand strings the extraction stage sometimes reads off signage.
const HALLUCINATIONS: &[&str] = &["Blue Sky Bakery", "Open 24 Hours", "Sunrise Optical"];

fn reference_db() -> ReferenceDb {
    let entries = BRANDS
        .iter()
        .filter(|b| b.in_db)
        .map(|b| {
            (
                b.name.to_string(),
                DbEntry {
                    tier: b.tier,
                    aliases: b.aliases.iter().map(|s| s.to_string()).collect(),
                },
            )
        })
        .collect();
    ReferenceDb::new(entries).unwrap()
}

/// 50 images with planted brands, stage-one replies with misses, aliases,
/// fenced output and hallucinations, and stage-two replies with some wrong
/// tiers. Replies are recorded as offline fixtures keyed by request hash.
fn brand_corpus(rng: &mut ChaCha8Rng, city: &City, dir: &Path) {
    let db = reference_db();
    let mut images = String::from("image_id,image_ref,point_id\n");
    let mut truth = String::from("image_id,brand,tier\n");
    let mut s1: BTreeMap<String, String> = BTreeMap::new();
    let mut refs = Vec::new();
    for i in 0..50 {
        let id = format!("IMG{:03}", i + 1);
        let image_ref = format!("images/{id}.jpg");
        let point = &city.points[rng.gen_range(0..city.points.len())];
        images.push_str(&format!("{id},{image_ref},{}\n", point.id));
        refs.push(ImageRef {
            image_id: id.clone(),
            image_ref: image_ref.clone(),
            point_id: Some(point.id.clone()),
        });
        let n = rng.gen_range(0..=4);
        let chosen: Vec<&Brand> = BRANDS.choose_multiple(rng, n).collect();
        if chosen.is_empty() {
            truth.push_str(&format!("{id},,\n"));
        }
        let mut seen = Vec::new();
        for b in &chosen {
            truth.push_str(&format!("{id},\"{}\",{}\n", b.name, b.tier));
            if rng.gen_bool(0.12) {
                continue;
            }
            let text = if !b.aliases.is_empty() && rng.gen_bool(0.4) {
                b.aliases[rng.gen_range(0..b.aliases.len())].to_string()
            } else {
                b.name.to_string()
            };
            seen.push(text);
        }
        if rng.gen_bool(0.15) {
            seen.push(HALLUCINATIONS[rng.gen_range(0..HALLUCINATIONS.len())].to_string());
        }
        let body = serde_json::json!({
            "brands_found": seen,
            "summary": format!("A street frontage with {} visible signboards.", seen.len()),
        })
        .to_string();
        let reply = if rng.gen_bool(0.2) {
            format!("```json\n{body}\n```")
        } else {
            body
        };
        s1.insert(image_ref, reply);
    }

    let mut model_tier: BTreeMap<String, BrandTier> = BTreeMap::new();
    for b in BRANDS.iter().filter(|b| !b.in_db) {
        let tier = if rng.gen_bool(0.8) {
            b.tier
        } else {
            *BrandTier::ALL.iter().filter(|t| **t != b.tier).collect::<Vec<_>>()[rng.gen_range(0..2)]
        };
        model_tier.insert(b.name.to_string(), tier);
    }
    for h in HALLUCINATIONS {
        model_tier.insert(h.to_string(), BrandTier::Ordinary);
    }

    let client = RecordingClient::new(move |req: &ModelRequest| match req.stage {
        Stage::S1 => Ok(s1[req.image_ref.as_deref().unwrap_or_default()].clone()),
        Stage::S2 => {
            let marker = "Brands to classify (JSON array):\n";
            let start = req.prompt.find(marker).unwrap() + marker.len();
            let end = start + req.prompt[start..].find('\n').unwrap();
            let brands: Vec<String> = serde_json::from_str(&req.prompt[start..end]).unwrap();
            let map: BTreeMap<&str, String> = brands
                .iter()
                .map(|b| (b.as_str(), model_tier.get(b).copied().unwrap_or(BrandTier::Ordinary).to_string()))
                .collect();
            Ok(serde_json::to_string(&map).unwrap())
        }
    });
    decode_corpus(&refs, &db, &client, 1).unwrap();
    let fixtures = client.into_fixtures();

    let brands = dir.join("brands");
    std::fs::create_dir_all(&brands).unwrap();
    write(&brands.join("reference_db.json"), (db.to_json() + "\n").as_bytes());
    write(&brands.join("images.csv"), images.as_bytes());
    write(&brands.join("ground_truth.csv"), truth.as_bytes());
    write(
        &brands.join("fixtures.json"),
        (serde_json::to_string_pretty(&fixtures).unwrap() + "\n").as_bytes(),
    );
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> sevi_core::Result<()>) -> Vec<u8> {
    let mut v = Vec::new();
    f(&mut v).unwrap();
    v
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/cli/fixtures/city".into()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let city = city(&mut rng);
    let counts = brand_counts(&mut rng, &city);
    let pois = pois(&mut rng, &city);
    let lbs = lbs(&mut rng, &city);

    write(&dir.join("points.csv"), &csv_bytes(|w| write_points_csv(w, &city.points)));
    write(&dir.join("segments.csv"), &csv_bytes(|w| write_segments_csv(w, &city.segments)));
    write(&dir.join("anchors.csv"), &csv_bytes(|w| write_anchors_csv(w, &city.anchors)));
    write(&dir.join("pois.csv"), &csv_bytes(|w| write_pois_csv(w, &pois)));
    write(&dir.join("lbs.csv"), &csv_bytes(|w| write_lbs_csv(w, &lbs)));
    write(&dir.join("brand_counts.csv"), counts.as_bytes());
    brand_corpus(&mut rng, &city, &dir);
    println!(
        "{}: {} points, {} segments, {} anchors, {} POIs, {} LBS rows",
        dir.display(),
        city.points.len(),
        city.segments.len(),
        city.anchors.len(),
        pois.len(),
        lbs.len()
    );
}
