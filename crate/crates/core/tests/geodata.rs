use std::fs::File;
use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sevi_core::geodata::{
    filter_active, load_tables, project_to_metric, radius_join, unproject, write_anchors_csv, write_lbs_csv,
    write_points_csv, write_pois_csv, write_segments_csv, DetectionCounts, InputFormat, KdTree, LbsObservation,
    MallAnchor, Period, PoiRecord, SamplingPoint, StreetSegment, TablePaths,
};

const LON: f64 = 118.7969;
const LAT: f64 = 32.0603;

fn paths(dir: &Path) -> TablePaths {
    TablePaths {
        points: dir.join("points.csv"),
        segments: dir.join("segments.csv"),
        anchors: dir.join("anchors.csv"),
        pois: dir.join("pois.csv"),
        lbs: dir.join("lbs.csv"),
    }
}

/// Writes a small consistent city: 3 segments of 4 points each.
fn write_city(dir: &Path) -> (Vec<SamplingPoint>, Vec<StreetSegment>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut points = Vec::new();
    let mut segments = Vec::new();
    for s in 0..3 {
        let seg = format!("S{s}");
        let mut ids = Vec::new();
        for k in 0..4u32 {
            let mut counts = [0u64; 16];
            for c in counts.iter_mut().take(14) {
                *c = rng.gen_range(0..5);
            }
            counts[14] = rng.gen_range(0..1000);
            counts[15] = 1000;
            let id = format!("P{s}{k}");
            let lon = LON + 0.001 * k as f64;
            let lat = LAT + 0.002 * s as f64;
            points.push(SamplingPoint::new(&id, lon, lat, &seg, k, DetectionCounts::from_array(counts)).unwrap());
            ids.push(id);
        }
        segments.push(StreetSegment {
            id: seg,
            length_m: 300.0,
            point_ids: ids,
        });
    }
    let (x0, y0) = project_to_metric(LON, LAT).unwrap();
    let anchors = vec![
        MallAnchor::at("A1", "regional", x0 + 100.0, y0),
        MallAnchor::at("A2", "regional", x0 + 900.0, y0 + 400.0),
    ];
    let pois = vec![
        PoiRecord::at("Q1", x0 + 5.0, y0 + 5.0, "food", false),
        PoiRecord::at("Q2", x0 + 10.0, y0, "retail", true),
    ];
    let lbs: Vec<LbsObservation> = segments
        .iter()
        .flat_map(|s| {
            Period::ALL.map(|p| LbsObservation {
                segment_id: s.id.clone(),
                period: p,
                uv: 10.0,
            })
        })
        .collect();
    let p = paths(dir);
    write_points_csv(File::create(&p.points).unwrap(), &points).unwrap();
    write_segments_csv(File::create(&p.segments).unwrap(), &segments).unwrap();
    write_anchors_csv(File::create(&p.anchors).unwrap(), &anchors).unwrap();
    write_pois_csv(File::create(&p.pois).unwrap(), &pois).unwrap();
    write_lbs_csv(File::create(&p.lbs).unwrap(), &lbs).unwrap();
    (points, segments)
}

#[test]
fn written_tables_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let (points, segments) = write_city(dir.path());
    let t = load_tables(&paths(dir.path()), InputFormat::Csv).unwrap();
    assert_eq!(t.points.len(), points.len());
    for (a, b) in t.points.iter().zip(&points) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.detections, b.detections);
        assert!((a.x - b.x).abs() < 1e-3 && (a.y - b.y).abs() < 1e-3);
    }
    assert_eq!(t.segments.len(), 3);
    for (a, b) in t.segments.iter().zip(&segments) {
        assert_eq!(a.point_ids, b.point_ids);
    }
    assert_eq!(t.anchors.len(), 2);
    assert_eq!(t.pois.len(), 2);
    assert_eq!(t.lbs.len(), 24);
}

#[test]
fn out_of_range_coordinate_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    write_city(dir.path());
    let p = paths(dir.path());
    let text = std::fs::read_to_string(&p.points).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[2] = lines[2].replacen(&format!("{LAT}"), "95.0", 1);
    assert!(lines[2].contains("95.0"));
    std::fs::write(&p.points, lines.join("\n")).unwrap();
    let err = load_tables(&p, InputFormat::Csv).unwrap_err();
    assert!(err.is_validation(), "{err}");
    assert!(err.to_string().contains("points.csv"), "{err}");
}

#[test]
fn missing_file_is_an_io_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_city(dir.path());
    let p = paths(dir.path());
    std::fs::remove_file(&p.anchors).unwrap();
    let err = load_tables(&p, InputFormat::Csv).unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("anchors.csv"), "{err}");
}

#[test]
fn point_in_unknown_segment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_city(dir.path());
    let p = paths(dir.path());
    let text = std::fs::read_to_string(&p.points).unwrap().replacen(",S2,", ",S9,", 1);
    std::fs::write(&p.points, text).unwrap();
    let err = load_tables(&p, InputFormat::Csv).unwrap_err();
    assert!(err.is_validation(), "{err}");
}

fn brute_within(points: &[[f64; 2]], q: [f64; 2], r: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| ((points[i][0] - q[0]).powi(2) + (points[i][1] - q[1]).powi(2)).sqrt() <= r)
        .collect()
}

proptest! {
    #[test]
    fn projection_round_trips(lon in 70.0f64..135.0, lat in -60.0f64..60.0) {
        let (x, y) = project_to_metric(lon, lat).unwrap();
        let (lon2, lat2) = unproject(x, y);
        prop_assert!((lon - lon2).abs() < 1e-9 && (lat - lat2).abs() < 1e-9);
    }

    #[test]
    fn kdtree_radius_query_matches_brute_force(
        pts in prop::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 1..200),
        q in (0.0f64..1000.0, 0.0f64..1000.0),
        r in 0.0f64..300.0,
    ) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        let tree = KdTree::new(pts.clone());
        let mut got = tree.within_radius([q.0, q.1], r);
        got.sort_unstable();
        prop_assert_eq!(got, brute_within(&pts, [q.0, q.1], r));
        let (i, d) = tree.nearest([q.0, q.1]).unwrap();
        let best = pts.iter().map(|p| ((p[0] - q.0).powi(2) + (p[1] - q.1).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
        prop_assert!((d - best).abs() < 1e-9);
        prop_assert!(i < pts.len());
    }

    #[test]
    fn radius_join_matches_brute_force(
        poi_xy in prop::collection::vec((0.0f64..500.0, 0.0f64..500.0), 0..100),
        anchor_xy in prop::collection::vec((0.0f64..500.0, 0.0f64..500.0), 1..40),
        r in 1.0f64..100.0,
    ) {
        let pois: Vec<PoiRecord> = poi_xy.iter().enumerate().map(|(i, (x, y))| PoiRecord::at(format!("Q{i}"), *x, *y, "food", false)).collect();
        let queries: Vec<MallAnchor> = anchor_xy.iter().enumerate().map(|(i, (x, y))| MallAnchor::at(format!("A{i}"), "c", *x, *y)).collect();
        let joined = radius_join(&queries, &pois, r);
        let poi_pts: Vec<[f64; 2]> = poi_xy.iter().map(|(x, y)| [*x, *y]).collect();
        for (q, list) in queries.iter().zip(&joined) {
            let mut got = list.clone();
            got.sort_unstable();
            prop_assert_eq!(got, brute_within(&poi_pts, [q.x, q.y], r));
        }
        let active = filter_active(&joined);
        prop_assert_eq!(active.count(), joined.iter().filter(|l| !l.is_empty()).count());
    }
}
