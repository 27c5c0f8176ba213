//! Strict CSV / GeoJSON ingestion and CSV re-serialization of the input tables.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    DetectionCounts, LbsObservation, MallAnchor, Period, PoiRecord, SamplingPoint, StreetSegment,
};
use crate::error::{Error, Result};
use crate::geodata::project_to_metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Csv,
    Geojson,
}

/// Input file locations. Under `Geojson`, the three spatial tables (points,
/// anchors, pois) are read as FeatureCollections; segments and lbs stay CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TablePaths {
    pub points: PathBuf,
    pub segments: PathBuf,
    pub anchors: PathBuf,
    pub pois: PathBuf,
    pub lbs: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct Tables {
    pub points: Vec<SamplingPoint>,
    pub segments: Vec<StreetSegment>,
    pub anchors: Vec<MallAnchor>,
    pub pois: Vec<PoiRecord>,
    pub lbs: Vec<LbsObservation>,
}

impl Tables {
    pub fn segment_index(&self) -> HashMap<&str, usize> {
        self.segments.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect()
    }
}

pub fn load_tables(paths: &TablePaths, format: InputFormat) -> Result<Tables> {
    let mut segments = read_segments(open(&paths.segments)?, &file_label(&paths.segments))?;
    let (points, anchors, pois) = match format {
        InputFormat::Csv => (
            read_points(open(&paths.points)?, &file_label(&paths.points))?,
            read_anchors(open(&paths.anchors)?, &file_label(&paths.anchors))?,
            read_pois(open(&paths.pois)?, &file_label(&paths.pois))?,
        ),
        InputFormat::Geojson => (
            parse_all(&read_geojson(&paths.points)?, &file_label(&paths.points), parse_point)?,
            parse_all(&read_geojson(&paths.anchors)?, &file_label(&paths.anchors), parse_anchor)?,
            parse_all(&read_geojson(&paths.pois)?, &file_label(&paths.pois), parse_poi)?,
        ),
    };
    let lbs = read_lbs(open(&paths.lbs)?, &file_label(&paths.lbs))?;

    link_points(&file_label(&paths.points), &points, &mut segments)?;
    check_lbs(&file_label(&paths.lbs), &lbs, &segments)?;

    Ok(Tables {
        points,
        segments,
        anchors,
        pois,
        lbs,
    })
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Checks point → segment references and order uniqueness, then fills
/// `StreetSegment::point_ids` in along-segment order.
fn link_points(file: &str, points: &[SamplingPoint], segments: &mut [StreetSegment]) -> Result<()> {
    let index: HashMap<String, usize> = segments.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
    let mut members: Vec<Vec<(u32, String)>> = vec![Vec::new(); segments.len()];
    let mut seen_order: HashSet<(usize, u32)> = HashSet::new();
    for (row, p) in points.iter().enumerate() {
        let Some(&si) = index.get(&p.segment_id) else {
            return Err(Error::Integrity {
                file: file.to_string(),
                row: row + 1,
                message: format!("point `{}` references unknown segment `{}`", p.id, p.segment_id),
            });
        };
        if !seen_order.insert((si, p.order_along_segment)) {
            return Err(Error::Integrity {
                file: file.to_string(),
                row: row + 1,
                message: format!(
                    "order {} repeated within segment `{}`",
                    p.order_along_segment, p.segment_id
                ),
            });
        }
        members[si].push((p.order_along_segment, p.id.clone()));
    }
    for (seg, mut m) in segments.iter_mut().zip(members) {
        m.sort();
        seg.point_ids = m.into_iter().map(|(_, id)| id).collect();
    }
    Ok(())
}

fn check_lbs(file: &str, lbs: &[LbsObservation], segments: &[StreetSegment]) -> Result<()> {
    let ids: HashSet<&str> = segments.iter().map(|s| s.id.as_str()).collect();
    let mut seen: HashSet<(&str, Period)> = HashSet::new();
    for (row, o) in lbs.iter().enumerate() {
        if !ids.contains(o.segment_id.as_str()) {
            return Err(Error::Integrity {
                file: file.to_string(),
                row: row + 1,
                message: format!("unknown segment `{}`", o.segment_id),
            });
        }
        if !seen.insert((o.segment_id.as_str(), o.period)) {
            return Err(Error::Integrity {
                file: file.to_string(),
                row: row + 1,
                message: format!("duplicate record for segment `{}`, period {}", o.segment_id, o.period),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Row access shared by CSV and GeoJSON
// ---------------------------------------------------------------------------

enum RowData<'a> {
    Csv {
        header: &'a HashMap<String, usize>,
        record: &'a csv::StringRecord,
    },
    Feature {
        lon_lat: (f64, f64),
        props: &'a serde_json::Map<String, Value>,
    },
}

struct Row<'a> {
    file: &'a str,
    row: usize,
    data: RowData<'a>,
}

impl<'a> Row<'a> {
    fn err(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Schema {
            file: self.file.to_string(),
            row: self.row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn text(&self, column: &str) -> Result<String> {
        match &self.data {
            RowData::Csv { header, record } => {
                let i = header[column];
                Ok(record.get(i).unwrap_or("").trim().to_string())
            }
            RowData::Feature { props, .. } => match props.get(column) {
                Some(Value::String(s)) => Ok(s.trim().to_string()),
                Some(Value::Number(n)) => Ok(n.to_string()),
                Some(Value::Bool(b)) => Ok(if *b { "1" } else { "0" }.to_string()),
                Some(other) => Err(self.err(column, format!("unsupported value {other}"))),
                None => Err(self.err(column, "missing property")),
            },
        }
    }

    fn id(&self, column: &str) -> Result<String> {
        let s = self.text(column)?;
        if s.is_empty() {
            return Err(self.err(column, "empty identifier"));
        }
        Ok(s)
    }

    fn real(&self, column: &str) -> Result<f64> {
        if let RowData::Feature { lon_lat, .. } = &self.data {
            if column == "lon" {
                return Ok(lon_lat.0);
            }
            if column == "lat" {
                return Ok(lon_lat.1);
            }
        }
        let s = self.text(column)?;
        let v: f64 = s.parse().map_err(|_| self.err(column, format!("`{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(column, format!("`{s}` is not finite")));
        }
        Ok(v)
    }

    fn count(&self, column: &str) -> Result<u64> {
        let s = self.text(column)?;
        if s.starts_with('-') {
            return Err(self.err(column, format!("negative count `{s}`")));
        }
        s.parse::<u64>()
            .map_err(|_| self.err(column, format!("`{s}` is not a nonnegative integer count")))
    }

    fn flag(&self, column: &str) -> Result<bool> {
        match self.text(column)?.as_str() {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(self.err(column, format!("`{s}` is not 0 or 1"))),
        }
    }

    fn lon_lat(&self) -> Result<(f64, f64, f64, f64)> {
        let lon = self.real("lon")?;
        let lat = self.real("lat")?;
        let (x, y) = project_to_metric(lon, lat).map_err(|e| self.err("lat", e.to_string()))?;
        Ok((lon, lat, x, y))
    }
}

fn read_csv<R: Read, T>(
    reader: R,
    file: &str,
    required: &[&str],
    parse: impl Fn(&Row) -> Result<T>,
) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header_rec = rdr.headers().map_err(|e| csv_err(file, 0, e))?.clone();
    let header: HashMap<String, usize> = header_rec
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().trim_start_matches('\u{feff}').to_string(), i))
        .collect();
    if header_rec.is_empty() || (header_rec.len() == 1 && header_rec[0].trim().is_empty()) {
        return Err(Error::Schema {
            file: file.to_string(),
            row: 0,
            column: required.first().copied().unwrap_or("").to_string(),
            message: "missing header row".into(),
        });
    }
    for col in required {
        if !header.contains_key(*col) {
            return Err(Error::Schema {
                file: file.to_string(),
                row: 0,
                column: col.to_string(),
                message: "column missing from header".into(),
            });
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let record = rec.map_err(|e| csv_err(file, i + 1, e))?;
        let row = Row {
            file,
            row: i + 1,
            data: RowData::Csv {
                header: &header,
                record: &record,
            },
        };
        out.push(parse(&row)?);
    }
    Ok(out)
}

fn csv_err(file: &str, row: usize, e: csv::Error) -> Error {
    Error::Schema {
        file: file.to_string(),
        row,
        column: String::new(),
        message: e.to_string(),
    }
}

fn read_geojson(path: &Path) -> Result<Value> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Schema {
        file: file_label(path),
        row: 0,
        column: String::new(),
        message: format!("invalid JSON: {e}"),
    })
}

fn parse_all<T>(doc: &Value, file: &str, parse: fn(&Row) -> Result<T>) -> Result<Vec<T>> {
    let schema = |row: usize, column: &str, message: &str| Error::Schema {
        file: file.to_string(),
        row,
        column: column.to_string(),
        message: message.to_string(),
    };
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(schema(0, "type", "expected a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| schema(0, "features", "missing features array"))?;
    let empty = serde_json::Map::new();
    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let row = i + 1;
        let geom = f.get("geometry").ok_or_else(|| schema(row, "geometry", "missing geometry"))?;
        if geom.get("type").and_then(Value::as_str) != Some("Point") {
            return Err(schema(row, "geometry", "only Point geometries are accepted"));
        }
        let coords = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .filter(|c| c.len() >= 2)
            .ok_or_else(|| schema(row, "coordinates", "expected [lon, lat]"))?;
        let lon = coords[0].as_f64().ok_or_else(|| schema(row, "lon", "not a number"))?;
        let lat = coords[1].as_f64().ok_or_else(|| schema(row, "lat", "not a number"))?;
        let props = match f.get("properties") {
            Some(Value::Object(m)) => m,
            Some(Value::Null) | None => &empty,
            Some(_) => return Err(schema(row, "properties", "expected an object")),
        };
        let r = Row {
            file,
            row,
            data: RowData::Feature {
                lon_lat: (lon, lat),
                props,
            },
        };
        out.push(parse(&r)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Per-table parsing
// ---------------------------------------------------------------------------

const POINT_COLUMNS: [&str; 5] = ["id", "lon", "lat", "segment_id", "order"];

fn parse_point(row: &Row) -> Result<SamplingPoint> {
    let id = row.id("id")?;
    let (lon, lat, x, y) = row.lon_lat()?;
    let segment_id = row.id("segment_id")?;
    let order = row.count("order")?;
    let order = u32::try_from(order).map_err(|_| row.err("order", "order exceeds u32 range"))?;
    let mut counts = [0u64; 16];
    for (slot, col) in counts.iter_mut().zip(DetectionCounts::COLUMNS) {
        *slot = row.count(col)?;
    }
    let detections = DetectionCounts::from_array(counts);
    if let Some(col) = detections.pixel_violation() {
        return Err(row.err(col, "green pixel count exceeds total pixel count"));
    }
    Ok(SamplingPoint {
        id,
        lon,
        lat,
        x,
        y,
        segment_id,
        order_along_segment: order,
        detections,
    })
}

fn parse_anchor(row: &Row) -> Result<MallAnchor> {
    let id = row.id("id")?;
    let category = row.id("category")?;
    let (lon, lat, x, y) = row.lon_lat()?;
    Ok(MallAnchor {
        id,
        category,
        lon,
        lat,
        x,
        y,
        sigma_m: None,
    })
}

fn parse_poi(row: &Row) -> Result<PoiRecord> {
    let id = row.id("id")?;
    let (lon, lat, x, y) = row.lon_lat()?;
    Ok(PoiRecord {
        id,
        lon,
        lat,
        x,
        y,
        top_category: row.text("top_category")?,
        is_premium: row.flag("is_premium")?,
    })
}

fn unique_ids<'a>(file: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            return Err(Error::Integrity {
                file: file.to_string(),
                row: i + 1,
                message: format!("duplicate id `{id}`"),
            });
        }
    }
    Ok(())
}

pub fn read_points<R: Read>(reader: R, file: &str) -> Result<Vec<SamplingPoint>> {
    let mut required: Vec<&str> = POINT_COLUMNS.to_vec();
    required.extend(DetectionCounts::COLUMNS);
    let points = read_csv(reader, file, &required, parse_point)?;
    unique_ids(file, points.iter().map(|p| p.id.as_str()))?;
    Ok(points)
}

pub fn read_segments<R: Read>(reader: R, file: &str) -> Result<Vec<StreetSegment>> {
    let segments = read_csv(reader, file, &["id", "length_m"], |row| {
        let id = row.id("id")?;
        let length_m = row.real("length_m")?;
        if length_m <= 0.0 {
            return Err(row.err("length_m", format!("length must be > 0, got {length_m}")));
        }
        Ok(StreetSegment {
            id,
            length_m,
            point_ids: Vec::new(),
        })
    })?;
    unique_ids(file, segments.iter().map(|s| s.id.as_str()))?;
    Ok(segments)
}

pub fn read_anchors<R: Read>(reader: R, file: &str) -> Result<Vec<MallAnchor>> {
    let anchors = read_csv(reader, file, &["id", "category", "lon", "lat"], parse_anchor)?;
    unique_ids(file, anchors.iter().map(|a| a.id.as_str()))?;
    Ok(anchors)
}

pub fn read_pois<R: Read>(reader: R, file: &str) -> Result<Vec<PoiRecord>> {
    let pois = read_csv(
        reader,
        file,
        &["id", "lon", "lat", "top_category", "is_premium"],
        parse_poi,
    )?;
    unique_ids(file, pois.iter().map(|p| p.id.as_str()))?;
    Ok(pois)
}

pub fn read_lbs<R: Read>(reader: R, file: &str) -> Result<Vec<LbsObservation>> {
    read_csv(reader, file, &["segment_id", "period", "uv"], |row| {
        let segment_id = row.id("segment_id")?;
        let period: Period = row.text("period")?.parse().map_err(|m: String| row.err("period", m))?;
        let uv = row.real("uv")?;
        if uv < 0.0 {
            return Err(row.err("uv", format!("crowd intensity must be >= 0, got {uv}")));
        }
        Ok(LbsObservation {
            segment_id,
            period,
            uv,
        })
    })
}

// ---------------------------------------------------------------------------
// Writers (shortest round-trip float formatting)
// ---------------------------------------------------------------------------

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn write_err(e: impl std::fmt::Display) -> Error {
    Error::io("<csv writer>", std::io::Error::other(e.to_string()))
}

pub fn write_points_csv<W: Write>(w: W, points: &[SamplingPoint]) -> Result<()> {
    let mut wtr = csv_writer(w);
    let mut header: Vec<&str> = POINT_COLUMNS.to_vec();
    header.extend(DetectionCounts::COLUMNS);
    wtr.write_record(&header).map_err(write_err)?;
    for p in points {
        let mut rec = vec![
            p.id.clone(),
            p.lon.to_string(),
            p.lat.to_string(),
            p.segment_id.clone(),
            p.order_along_segment.to_string(),
        ];
        rec.extend(p.detections.to_array().iter().map(u64::to_string));
        wtr.write_record(&rec).map_err(write_err)?;
    }
    wtr.flush().map_err(write_err)
}

pub fn write_segments_csv<W: Write>(w: W, segments: &[StreetSegment]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["id", "length_m"]).map_err(write_err)?;
    for s in segments {
        wtr.write_record([s.id.clone(), s.length_m.to_string()]).map_err(write_err)?;
    }
    wtr.flush().map_err(write_err)
}

pub fn write_anchors_csv<W: Write>(w: W, anchors: &[MallAnchor]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["id", "category", "lon", "lat"]).map_err(write_err)?;
    for a in anchors {
        wtr.write_record([a.id.clone(), a.category.clone(), a.lon.to_string(), a.lat.to_string()])
            .map_err(write_err)?;
    }
    wtr.flush().map_err(write_err)
}

pub fn write_pois_csv<W: Write>(w: W, pois: &[PoiRecord]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["id", "lon", "lat", "top_category", "is_premium"]).map_err(write_err)?;
    for p in pois {
        wtr.write_record([
            p.id.clone(),
            p.lon.to_string(),
            p.lat.to_string(),
            p.top_category.clone(),
            u8::from(p.is_premium).to_string(),
        ])
        .map_err(write_err)?;
    }
    wtr.flush().map_err(write_err)
}

pub fn write_lbs_csv<W: Write>(w: W, lbs: &[LbsObservation]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["segment_id", "period", "uv"]).map_err(write_err)?;
    for o in lbs {
        wtr.write_record([o.segment_id.clone(), o.period.label().to_string(), o.uv.to_string()])
            .map_err(write_err)?;
    }
    wtr.flush().map_err(write_err)
}

/// Crowd intensity per segment and period.
pub fn lbs_by_segment(lbs: &[LbsObservation]) -> BTreeMap<(String, Period), f64> {
    lbs.iter().map(|o| ((o.segment_id.clone(), o.period), o.uv)).collect()
}
