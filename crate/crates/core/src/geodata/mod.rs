//! Data model, ingestion, metric projection, spatial indexing and spatial joins.

mod io;
mod join;
pub mod kdtree;
pub mod projection;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use io::{
    lbs_by_segment, load_tables, read_anchors, read_lbs, read_points, read_pois, read_segments, write_anchors_csv,
    write_lbs_csv, write_points_csv, write_pois_csv, write_segments_csv, InputFormat, TablePaths,
    Tables,
};
pub use join::{filter_active, radius_join, ActiveSubset};
pub use kdtree::KdTree;
pub use projection::{project_to_metric, unproject, EARTH_RADIUS_M};

/// Anything with planar metric coordinates.
pub trait Planar {
    fn xy(&self) -> [f64; 2];
}

impl Planar for [f64; 2] {
    fn xy(&self) -> [f64; 2] {
        *self
    }
}

/// Per-side detection counts at one sampling point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub signboards_left: u64,
    pub signboards_right: u64,
    pub closed_left: u64,
    pub closed_right: u64,
    pub glass_left: u64,
    pub glass_right: u64,
    pub persons_left: u64,
    pub persons_right: u64,
    pub motor_left: u64,
    pub motor_right: u64,
    pub nonmotor_left: u64,
    pub nonmotor_right: u64,
    pub green_pixels_left: u64,
    pub green_pixels_right: u64,
    pub total_pixels_left: u64,
    pub total_pixels_right: u64,
}

impl DetectionCounts {
    /// Column names in file order.
    pub const COLUMNS: [&'static str; 16] = [
        "signboards_left",
        "signboards_right",
        "closed_left",
        "closed_right",
        "glass_left",
        "glass_right",
        "persons_left",
        "persons_right",
        "motor_left",
        "motor_right",
        "nonmotor_left",
        "nonmotor_right",
        "green_pixels_left",
        "green_pixels_right",
        "total_pixels_left",
        "total_pixels_right",
    ];

    pub fn from_array(v: [u64; 16]) -> Self {
        DetectionCounts {
            signboards_left: v[0],
            signboards_right: v[1],
            closed_left: v[2],
            closed_right: v[3],
            glass_left: v[4],
            glass_right: v[5],
            persons_left: v[6],
            persons_right: v[7],
            motor_left: v[8],
            motor_right: v[9],
            nonmotor_left: v[10],
            nonmotor_right: v[11],
            green_pixels_left: v[12],
            green_pixels_right: v[13],
            total_pixels_left: v[14],
            total_pixels_right: v[15],
        }
    }

    pub fn to_array(&self) -> [u64; 16] {
        [
            self.signboards_left,
            self.signboards_right,
            self.closed_left,
            self.closed_right,
            self.glass_left,
            self.glass_right,
            self.persons_left,
            self.persons_right,
            self.motor_left,
            self.motor_right,
            self.nonmotor_left,
            self.nonmotor_right,
            self.green_pixels_left,
            self.green_pixels_right,
            self.total_pixels_left,
            self.total_pixels_right,
        ]
    }

    pub fn signboards(&self) -> u64 {
        self.signboards_left + self.signboards_right
    }
    pub fn closed(&self) -> u64 {
        self.closed_left + self.closed_right
    }
    pub fn glass(&self) -> u64 {
        self.glass_left + self.glass_right
    }
    pub fn persons(&self) -> u64 {
        self.persons_left + self.persons_right
    }
    pub fn motor(&self) -> u64 {
        self.motor_left + self.motor_right
    }
    pub fn nonmotor(&self) -> u64 {
        self.nonmotor_left + self.nonmotor_right
    }
    pub fn green_pixels(&self) -> u64 {
        self.green_pixels_left + self.green_pixels_right
    }
    pub fn total_pixels(&self) -> u64 {
        self.total_pixels_left + self.total_pixels_right
    }

    /// Names the first side whose green pixel count exceeds its total.
    pub fn pixel_violation(&self) -> Option<&'static str> {
        if self.green_pixels_left > self.total_pixels_left {
            Some("green_pixels_left")
        } else if self.green_pixels_right > self.total_pixels_right {
            Some("green_pixels_right")
        } else {
            None
        }
    }
}

impl std::ops::AddAssign<&DetectionCounts> for DetectionCounts {
    fn add_assign(&mut self, rhs: &DetectionCounts) {
        let mut a = self.to_array();
        for (x, y) in a.iter_mut().zip(rhs.to_array()) {
            *x += y;
        }
        *self = DetectionCounts::from_array(a);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPoint {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    pub x: f64,
    pub y: f64,
    pub segment_id: String,
    pub order_along_segment: u32,
    pub detections: DetectionCounts,
}

impl SamplingPoint {
    pub fn new(
        id: impl Into<String>,
        lon: f64,
        lat: f64,
        segment_id: impl Into<String>,
        order_along_segment: u32,
        detections: DetectionCounts,
    ) -> crate::Result<Self> {
        let (x, y) = project_to_metric(lon, lat)?;
        Ok(SamplingPoint {
            id: id.into(),
            lon,
            lat,
            x,
            y,
            segment_id: segment_id.into(),
            order_along_segment,
            detections,
        })
    }
}

impl Planar for SamplingPoint {
    fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreetSegment {
    pub id: String,
    pub length_m: f64,
    /// Point ids ordered by `order_along_segment`; filled during ingestion.
    pub point_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MallAnchor {
    pub id: String,
    pub category: String,
    pub lon: f64,
    pub lat: f64,
    pub x: f64,
    pub y: f64,
    /// Decay bandwidth, set by sigma calibration.
    pub sigma_m: Option<f64>,
}

impl MallAnchor {
    /// An anchor placed directly in metric coordinates.
    pub fn at(id: impl Into<String>, category: impl Into<String>, x: f64, y: f64) -> Self {
        let (lon, lat) = unproject(x, y);
        MallAnchor {
            id: id.into(),
            category: category.into(),
            lon,
            lat,
            x,
            y,
            sigma_m: None,
        }
    }
}

impl Planar for MallAnchor {
    fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    pub x: f64,
    pub y: f64,
    pub top_category: String,
    pub is_premium: bool,
}

impl PoiRecord {
    pub fn at(id: impl Into<String>, x: f64, y: f64, top_category: impl Into<String>, is_premium: bool) -> Self {
        let (lon, lat) = unproject(x, y);
        PoiRecord {
            id: id.into(),
            lon,
            lat,
            x,
            y,
            top_category: top_category.into(),
            is_premium,
        }
    }
}

impl Planar for PoiRecord {
    fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// The eight tidal periods, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Period {
    #[serde(rename = "wd_am")]
    WeekdayMorning,
    #[serde(rename = "wd_md")]
    WeekdayMidday,
    #[serde(rename = "wd_pm")]
    WeekdayEvening,
    #[serde(rename = "wd_nt")]
    WeekdayNight,
    #[serde(rename = "we_am")]
    WeekendMorning,
    #[serde(rename = "we_md")]
    WeekendMidday,
    #[serde(rename = "we_pm")]
    WeekendEvening,
    #[serde(rename = "we_nt")]
    WeekendNight,
}

impl Period {
    pub const ALL: [Period; 8] = [
        Period::WeekdayMorning,
        Period::WeekdayMidday,
        Period::WeekdayEvening,
        Period::WeekdayNight,
        Period::WeekendMorning,
        Period::WeekendMidday,
        Period::WeekendEvening,
        Period::WeekendNight,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Period::WeekdayMorning => "wd_am",
            Period::WeekdayMidday => "wd_md",
            Period::WeekdayEvening => "wd_pm",
            Period::WeekdayNight => "wd_nt",
            Period::WeekendMorning => "we_am",
            Period::WeekendMidday => "we_md",
            Period::WeekendEvening => "we_pm",
            Period::WeekendNight => "we_nt",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Period::WeekdayMorning => "Weekday Morning",
            Period::WeekdayMidday => "Weekday Midday",
            Period::WeekdayEvening => "Weekday Evening",
            Period::WeekdayNight => "Weekday Night",
            Period::WeekendMorning => "Weekend Morning",
            Period::WeekendMidday => "Weekend Midday",
            Period::WeekendEvening => "Weekend Evening",
            Period::WeekendNight => "Weekend Night",
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Period::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| format!("unknown period `{s}` (expected one of wd_am..we_nt)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbsObservation {
    pub segment_id: String,
    pub period: Period,
    pub uv: f64,
}
