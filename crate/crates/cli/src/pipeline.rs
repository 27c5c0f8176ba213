//! Stage computations. Each function is pure over its inputs; writing files
//! is left to the runner so the robustness suite can re-run stages in memory.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;
use sevi_core::geodata::{load_tables, LbsObservation, Period, SamplingPoint, Tables};
use sevi_core::gwr::{time_sliced, GwrDesign, TimeSliced};
use sevi_core::indicators::{
    point_brand_ratio, segment_indicators, smooth_along_route, BrandCounts, IndicatorVector, SegmentIndicators,
};
use sevi_core::scoring::{align_and_normalize, score, NormalizedMatrix, SeviScores, ALIGNED_NAMES};
use sevi_core::spillover::{calibrate_sigma, SigmaTable, SpilloverConfig, SpilloverField};
use sevi_core::stats::{pca, spearman_matrix, CorrelationMatrix, PcaModel};
use sevi_core::{Error, Result};

use crate::config::{GwrConfig, IndicatorConfig, PipelineConfig, XSource};
use crate::output::sha256_hex;

pub struct Ingested {
    pub tables: Tables,
    /// Brand tallies parallel to `tables.points`.
    pub brands: Vec<BrandCounts>,
    /// Configured input path -> SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and validates the input tables. Brand tallies come from
/// `input.brand_counts` when configured, else from `decoded`, else zero.
pub fn ingest(
    config: &PipelineConfig,
    workdir: &Path,
    decoded: Option<&BTreeMap<String, BrandCounts>>,
) -> Result<Ingested> {
    let paths = config.table_paths(workdir);
    let tables = load_tables(&paths, config.input.format)?;
    let mut inputs = BTreeMap::new();
    let mut files = vec![
        &config.input.points,
        &config.input.segments,
        &config.input.anchors,
        &config.input.pois,
        &config.input.lbs,
    ];
    if let Some(p) = &config.input.brand_counts {
        files.push(p);
    }
    for rel in files {
        inputs.insert(rel.display().to_string(), sha256_hex(&read_bytes(&workdir.join(rel))?));
    }
    let table = match &config.input.brand_counts {
        Some(rel) => {
            let path = workdir.join(rel);
            let label = rel.display().to_string();
            Some(read_brand_counts(read_bytes(&path)?.as_slice(), &label, &tables.points)?)
        }
        None => decoded.cloned(),
    };
    let brands = tables
        .points
        .iter()
        .map(|p| table.as_ref().and_then(|t| t.get(&p.id).copied()).unwrap_or_default())
        .collect();
    Ok(Ingested { tables, brands, inputs })
}

/// Reads `point_id,n_local,n_global,n_ordinary`.
pub fn read_brand_counts(
    bytes: &[u8],
    label: &str,
    points: &[SamplingPoint],
) -> Result<BTreeMap<String, BrandCounts>> {
    #[derive(serde::Deserialize)]
    struct Row {
        point_id: String,
        n_local: u64,
        n_global: u64,
        n_ordinary: u64,
    }
    let known: std::collections::HashSet<&str> = points.iter().map(|p| p.id.as_str()).collect();
    let mut out = BTreeMap::new();
    for (i, row) in csv::Reader::from_reader(bytes).deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Schema {
            file: label.to_string(),
            row: i + 1,
            column: "point_id/n_local/n_global/n_ordinary".into(),
            message: e.to_string(),
        })?;
        if !known.contains(row.point_id.as_str()) {
            return Err(Error::Integrity {
                file: label.to_string(),
                row: i + 1,
                message: format!("unknown point `{}`", row.point_id),
            });
        }
        let counts = BrandCounts {
            n_local: row.n_local,
            n_global: row.n_global,
            n_ordinary: row.n_ordinary,
        };
        if out.insert(row.point_id.clone(), counts).is_some() {
            return Err(Error::Integrity {
                file: label.to_string(),
                row: i + 1,
                message: format!("duplicate point `{}`", row.point_id),
            });
        }
    }
    Ok(out)
}

pub fn write_brand_counts(counts: &BTreeMap<String, BrandCounts>) -> Vec<Vec<String>> {
    counts
        .iter()
        .map(|(id, c)| {
            vec![
                id.clone(),
                c.n_local.to_string(),
                c.n_global.to_string(),
                c.n_ordinary.to_string(),
            ]
        })
        .collect()
}

pub struct SpilloverStage {
    pub sigma: SigmaTable,
    pub field: SpilloverField,
    /// Field value at every sampling point.
    pub point_mv: Vec<f64>,
}

pub fn spillover(tables: &Tables, config: &SpilloverConfig) -> Result<SpilloverStage> {
    config.validate()?;
    let sigma = calibrate_sigma(&tables.anchors)?;
    let field = SpilloverField::new(&tables.anchors, &sigma)?;
    let point_mv = field.values(&tables.points, config);
    Ok(SpilloverStage { sigma, field, point_mv })
}

pub struct IndicatorTable {
    /// Segments that have sampling points, in id order.
    pub segment_ids: Vec<String>,
    pub values: Vec<SegmentIndicators>,
    /// Mean planar position of each segment's points.
    pub centroids: Vec<[f64; 2]>,
    /// Smoothed point-level brand ratio, parallel to the point table.
    pub point_br: Vec<f64>,
}

impl IndicatorTable {
    pub fn vectors(&self) -> Vec<IndicatorVector> {
        self.values.iter().map(|v| v.values).collect()
    }
}

/// Indicators for every segment with points. The segment spillover value is
/// the mean of its points' field values.
pub fn indicators(
    tables: &Tables,
    brands: &[BrandCounts],
    point_mv: &[f64],
    config: &IndicatorConfig,
) -> Result<IndicatorTable> {
    let index: HashMap<&str, usize> = tables.points.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let mut segments: Vec<&sevi_core::geodata::StreetSegment> = tables.segments.iter().collect();
    segments.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = IndicatorTable {
        segment_ids: Vec::new(),
        values: Vec::new(),
        centroids: Vec::new(),
        point_br: vec![0.0; tables.points.len()],
    };
    let mut empty = 0;
    for seg in segments {
        if seg.point_ids.is_empty() {
            empty += 1;
            continue;
        }
        let mut idx: Vec<usize> = seg.point_ids.iter().map(|id| index[id.as_str()]).collect();
        idx.sort_by_key(|&i| tables.points[i].order_along_segment);
        let pts: Vec<&SamplingPoint> = idx.iter().map(|&i| &tables.points[i]).collect();
        let seg_brands: Vec<BrandCounts> = idx.iter().map(|&i| brands[i]).collect();
        let mv = idx.iter().map(|&i| point_mv[i]).sum::<f64>() / idx.len() as f64;
        let values = segment_indicators(
            seg,
            &pts,
            &seg_brands,
            mv,
            &config.brand_weights,
            config.smoothing_window,
        )?;
        let raw: Vec<f64> = pts
            .iter()
            .zip(&seg_brands)
            .map(|(p, b)| point_brand_ratio(&p.detections, b, &config.brand_weights))
            .collect();
        for (&i, v) in idx.iter().zip(smooth_along_route(&raw, config.smoothing_window)?) {
            out.point_br[i] = v;
        }
        let n = pts.len() as f64;
        out.centroids.push([
            pts.iter().map(|p| p.x).sum::<f64>() / n,
            pts.iter().map(|p| p.y).sum::<f64>() / n,
        ]);
        out.segment_ids.push(seg.id.clone());
        out.values.push(values);
    }
    if empty > 0 {
        log::warn!("{empty} segments have no sampling points and are left out");
    }
    Ok(out)
}

pub struct SeviStage {
    pub matrix: NormalizedMatrix,
    pub scores: SeviScores,
}

pub fn sevi(table: &IndicatorTable) -> Result<SeviStage> {
    let matrix = align_and_normalize(&table.segment_ids, &table.vectors())?;
    let scores = score(&matrix)?;
    Ok(SeviStage { matrix, scores })
}

/// Mean crowd intensity of each segment across all periods.
pub fn mean_uv(segment_ids: &[String], lbs: &[LbsObservation]) -> Vec<f64> {
    let mut sums: HashMap<&str, (f64, usize)> = HashMap::new();
    for o in lbs {
        let e = sums.entry(o.segment_id.as_str()).or_default();
        e.0 += o.uv;
        e.1 += 1;
    }
    segment_ids
        .iter()
        .map(|id| sums.get(id.as_str()).map_or(0.0, |(s, n)| s / *n as f64))
        .collect()
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsStage {
    pub correlation: CorrelationMatrix,
    pub pca: PcaModel,
}

/// Spearman matrix of the raw indicators, SEVI and mean crowd intensity, and
/// PCA of the raw indicators. Constant columns are left out of both.
pub fn stats(table: &IndicatorTable, scores: &SeviScores, lbs: &[LbsObservation], k: usize) -> Result<StatsStage> {
    let vectors = table.vectors();
    let mut labels: Vec<&str> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (j, name) in IndicatorVector::NAMES.iter().enumerate() {
        let col: Vec<f64> = vectors.iter().map(|v| v.to_array()[j]).collect();
        if is_constant(&col) {
            log::warn!("indicator `{name}` is constant; left out of correlation and PCA");
            continue;
        }
        labels.push(name);
        columns.push(col);
    }
    let n_indicators = columns.len();
    for (name, col) in [("sevi", scores.result.sevi.clone()), ("uv", mean_uv(&table.segment_ids, lbs))] {
        if is_constant(&col) {
            log::warn!("`{name}` is constant; left out of the correlation matrix");
        } else {
            labels.push(name);
            columns.push(col);
        }
    }
    let correlation = spearman_matrix(&labels, &columns)?;
    let rows: Vec<Vec<f64>> = (0..vectors.len())
        .map(|i| columns[..n_indicators].iter().map(|c| c[i]).collect())
        .collect();
    let pca = pca(&rows, &labels[..n_indicators], k.min(n_indicators))?;
    if !pca.varimax_converged {
        log::warn!("varimax did not converge in {} iterations", pca.varimax_iterations);
    }
    Ok(StatsStage { correlation, pca })
}

/// Names of the GWR predictors for the configured X source.
pub fn predictor_names(source: XSource) -> [&'static str; 9] {
    match source {
        XSource::Normalized => ALIGNED_NAMES,
        XSource::Raw => IndicatorVector::NAMES,
    }
}

/// One design per period: segment centroids, the nine indicators (constant
/// columns dropped) and that period's crowd intensity.
pub fn gwr_designs(
    table: &IndicatorTable,
    matrix: &NormalizedMatrix,
    lbs: &[LbsObservation],
    config: &GwrConfig,
) -> Result<Vec<(Period, GwrDesign)>> {
    let full: Vec<[f64; 9]> = match config.x_source {
        XSource::Normalized => matrix.rows.clone(),
        XSource::Raw => table.vectors().iter().map(IndicatorVector::to_array).collect(),
    };
    let names = predictor_names(config.x_source);
    let keep: Vec<usize> = (0..9)
        .filter(|&j| {
            let col: Vec<f64> = full.iter().map(|r| r[j]).collect();
            let constant = is_constant(&col);
            if constant {
                log::warn!("predictor `{}` is constant and is dropped from GWR", names[j]);
            }
            !constant
        })
        .collect();
    let rows: Vec<Vec<f64>> = full.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
    let kept: Vec<String> = keep.iter().map(|&j| names[j].to_string()).collect();
    let by_key = sevi_core::geodata::lbs_by_segment(lbs);
    Period::ALL
        .iter()
        .map(|&p| {
            let y = table
                .segment_ids
                .iter()
                .map(|id| {
                    by_key
                        .get(&(id.clone(), p))
                        .copied()
                        .ok_or_else(|| Error::MissingPeriod(format!("{p} (no observation for segment `{id}`)")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let design = GwrDesign::new(table.centroids.clone(), &rows, y, kept.clone(), config.kernel)?
                .with_dof(config.dof);
            Ok((p, design))
        })
        .collect()
}

pub fn gwr(
    table: &IndicatorTable,
    matrix: &NormalizedMatrix,
    lbs: &[LbsObservation],
    config: &GwrConfig,
) -> Result<TimeSliced> {
    time_sliced(&gwr_designs(table, matrix, lbs, config)?, config.bandwidth)
}
