use std::path::{Path, PathBuf};
use std::process::Command;

use sevi_cli::{Manifest, PipelineConfig, Runner};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/city")
}

/// Copies the bundled city (inputs only) into a fresh temporary directory.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&fixture_dir(), dir.path());
    dir
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name == "out" {
            continue;
        }
        let target = to.join(&name);
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn sevi(workdir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sevi"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .output()
        .unwrap()
}

fn config(workdir: &Path, overrides: &[String]) -> PipelineConfig {
    PipelineConfig::load(&workdir.join("sevi.toml"), overrides).unwrap()
}

#[test]
fn golden_run_matches_committed_manifest_and_reruns_identically() {
    let dir = workspace();
    let out = sevi(dir.path(), &["run", "--golden", "golden_manifest.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("out/manifest.json")).unwrap();
    let manifest = Manifest::load(&dir.path().join("out/manifest.json")).unwrap();
    assert!(manifest.verify_files(&dir.path().join("out")).is_empty());

    let out = sevi(dir.path(), &["run"]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(dir.path().join("out/manifest.json")).unwrap(), first);
}

#[test]
fn missing_input_fails_at_ingest_with_file_name() {
    let dir = workspace();
    std::fs::remove_file(dir.path().join("lbs.csv")).unwrap();
    let out = sevi(dir.path(), &["ingest"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ingest") && err.contains("lbs.csv"), "{err}");
}

#[test]
fn invalid_config_is_a_validation_error() {
    let dir = workspace();
    let out = sevi(dir.path(), &["--set", "indicators.smoothing_window=4", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sevi(dir.path(), &["--set", "gwr.colour=1", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stage_subcommands_write_their_tables() {
    let dir = workspace();
    let out = sevi(dir.path(), &["sevi"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["ingest_summary.json", "sigma.csv", "mv.csv", "indicators.csv", "sevi.csv", "sevi.geojson"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("out/gwr_summary.json").exists());

    let text = std::fs::read_to_string(dir.path().join("out/sevi.csv")).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("segment_id,A,U,P,sevi,sevi_eq,sevi_pca"));
    assert_eq!(rows.count(), 200);

    let geo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/sevi.geojson")).unwrap()).unwrap();
    let feats = geo["features"].as_array().unwrap();
    assert_eq!(feats.len(), 2000);
    assert_eq!(feats[0]["properties"].as_object().unwrap().len(), 13);
}

#[test]
fn brand_decode_is_deterministic_and_eval_reads_its_output() {
    let dir = workspace();
    assert!(sevi(dir.path(), &["brands", "decode"]).status.success());
    let a = std::fs::read(dir.path().join("out/brands_decoded.csv")).unwrap();
    assert!(sevi(dir.path(), &["--set", "brands.parallelism=1", "brands", "decode"]).status.success());
    let b = std::fs::read(dir.path().join("out/brands_decoded.csv")).unwrap();
    assert_eq!(a, b);

    let stage_eval = std::fs::read(dir.path().join("out/brand_eval.json")).unwrap();
    let out = sevi(dir.path(), &["brands", "eval"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Overall"));
    assert_eq!(std::fs::read(dir.path().join("out/brand_eval.json")).unwrap(), stage_eval);
}

#[test]
fn stale_fixture_fails_loudly() {
    let dir = workspace();
    let out = sevi(dir.path(), &["--set", "brands.fixtures=\"missing.json\"", "brands", "decode"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(dir.path().join("brands/fixtures.json"), "{}").unwrap();
    let out = sevi(dir.path(), &["brands", "decode"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no offline fixture"));
}

#[test]
fn threshold_override_changes_spillover_but_not_inputs() {
    let dir = workspace();
    let mut base = Runner::new(config(dir.path(), &[]), dir.path()).unwrap();
    base.run_spillover().unwrap();
    let mut wide = Runner::new(config(dir.path(), &["spillover.threshold_m=3000".into()]), dir.path()).unwrap();
    wide.run_spillover().unwrap();
    let (a, b) = (&base.spill.unwrap().point_mv, &wide.spill.unwrap().point_mv);
    assert!(a.iter().zip(b).all(|(x, y)| y >= x));
    assert!(a.iter().zip(b).any(|(x, y)| y > x));
    assert_ne!(base.config.hash(), wide.config.hash());
}

#[test]
fn geojson_input_format_gives_the_same_indicators() {
    let dir = workspace();
    let mut csv = Runner::new(config(dir.path(), &[]), dir.path()).unwrap();
    csv.run_indicators().unwrap();

    let tables = &csv.ingested.as_ref().unwrap().tables;
    let features = |rows: Vec<(serde_json::Value, f64, f64)>| {
        serde_json::json!({
            "type": "FeatureCollection",
            "features": rows.into_iter().map(|(props, lon, lat)| serde_json::json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [lon, lat]},
                "properties": props,
            })).collect::<Vec<_>>(),
        })
        .to_string()
    };
    let points = tables
        .points
        .iter()
        .map(|p| {
            let mut props = serde_json::json!({"id": p.id, "segment_id": p.segment_id, "order": p.order_along_segment});
            for (k, v) in sevi_core::geodata::DetectionCounts::COLUMNS.iter().zip(p.detections.to_array()) {
                props[*k] = v.into();
            }
            (props, p.lon, p.lat)
        })
        .collect();
    let anchors = tables
        .anchors
        .iter()
        .map(|a| (serde_json::json!({"id": a.id, "category": a.category}), a.lon, a.lat))
        .collect();
    let pois = tables
        .pois
        .iter()
        .map(|p| {
            let props = serde_json::json!({"id": p.id, "top_category": p.top_category, "is_premium": p.is_premium});
            (props, p.lon, p.lat)
        })
        .collect();
    std::fs::write(dir.path().join("points.geojson"), features(points)).unwrap();
    std::fs::write(dir.path().join("anchors.geojson"), features(anchors)).unwrap();
    std::fs::write(dir.path().join("pois.geojson"), features(pois)).unwrap();

    let overrides: Vec<String> = [
        "input.format=\"geojson\"",
        "input.points=\"points.geojson\"",
        "input.anchors=\"anchors.geojson\"",
        "input.pois=\"pois.geojson\"",
        "output.dir=\"out_geojson\"",
    ]
    .map(String::from)
    .to_vec();
    let mut geo = Runner::new(config(dir.path(), &overrides), dir.path()).unwrap();
    geo.run_indicators().unwrap();
    let (a, b) = (csv.table.unwrap(), geo.table.unwrap());
    assert_eq!(a.segment_ids, b.segment_ids);
    for (x, y) in a.values.iter().zip(&b.values) {
        for (u, v) in x.values.to_array().iter().zip(y.values.to_array()) {
            assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0), "{u} vs {v}");
        }
    }
}
