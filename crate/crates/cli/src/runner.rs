//! Stage orchestration. Each stage runs its prerequisites first, writes its
//! tables once and records their checksums for the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::json;
use sevi_core::brandsem::{
    decode_corpus, evaluate, predictions_to_labels, read_images_csv, read_labels, write_decoded_csv, EvalReport,
    ImageDecode, LiveClient, LiveConfig, ModelClient, OfflineClient, ReferenceDb,
};
use sevi_core::gwr::{coef_summary, TimeSliced};
use sevi_core::indicators::{BrandCounts, IndicatorVector};
use sevi_core::scoring::{ALIGNED_NAMES, DIMENSION_NAMES};
use sevi_core::{Error, Result};

use crate::config::{Backend, PipelineConfig};
use crate::manifest::{Manifest, StageRecord};
use crate::output::{emit_geojson, f6, FeatureScores, OutputDir};
use crate::pipeline::{self, IndicatorTable, Ingested, SeviStage, SpilloverStage, StatsStage};
use crate::report;
use crate::robustness::{self, r2_column, R2Grid, RobustnessReport, TierValidation};

/// A failed stage and its cause.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl StageError {
    /// 1 for input or configuration problems, 2 for computation failures.
    pub fn exit_code(&self) -> i32 {
        if self.source.is_validation() {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub type StageResult<T = ()> = std::result::Result<T, StageError>;

fn in_stage<T>(stage: &'static str, r: Result<T>) -> StageResult<T> {
    r.map_err(|source| StageError { stage, source })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub struct BrandStage {
    pub decodes: Vec<ImageDecode>,
    /// Summed tallies per sampling point, for images that carry a point id.
    pub counts: BTreeMap<String, BrandCounts>,
    pub eval: Option<EvalReport>,
}

pub struct Runner {
    pub config: PipelineConfig,
    pub workdir: PathBuf,
    pub out: OutputDir,
    pub stages: Vec<StageRecord>,
    pub brands: Option<Option<BrandStage>>,
    pub ingested: Option<Ingested>,
    pub spill: Option<SpilloverStage>,
    pub table: Option<IndicatorTable>,
    pub sevi: Option<SeviStage>,
    pub stats: Option<StatsStage>,
    pub tiers: Option<std::result::Result<TierValidation, String>>,
    pub gwr: Option<TimeSliced>,
    pub robustness: Option<RobustnessReport>,
}

impl Runner {
    pub fn new(config: PipelineConfig, workdir: &Path) -> StageResult<Self> {
        in_stage("config", config.validate())?;
        let out = in_stage("config", OutputDir::create(workdir.join(&config.output.dir)))?;
        Ok(Runner {
            config,
            workdir: workdir.to_path_buf(),
            out,
            stages: Vec::new(),
            brands: None,
            ingested: None,
            spill: None,
            table: None,
            sevi: None,
            stats: None,
            tiers: None,
            gwr: None,
            robustness: None,
        })
    }

    fn finish(&mut self, name: &'static str) {
        let outputs = self.out.take_written();
        log::info!("stage {name}: {} files", outputs.len());
        self.stages.push(StageRecord {
            name: name.to_string(),
            outputs,
        });
    }

    fn resolve(&self, rel: &Path) -> PathBuf {
        self.workdir.join(rel)
    }

    pub fn reference_db(&self) -> Result<ReferenceDb> {
        match &self.config.brands.reference_db {
            Some(p) => ReferenceDb::load(&self.resolve(p)),
            None => Ok(ReferenceDb::default()),
        }
    }

    pub fn model_client(&self) -> Result<Box<dyn ModelClient>> {
        match self.config.brands.backend {
            Backend::Offline => {
                let path = self.config.brands.fixtures.as_ref().ok_or_else(|| {
                    Error::Config("brands.fixtures is required for the offline backend".into())
                })?;
                Ok(Box::new(OfflineClient::load(&self.resolve(path))?))
            }
            Backend::Live => Ok(Box::new(LiveClient::new(LiveConfig::from_env()?))),
        }
    }

    /// Decodes the configured image corpus; a no-op without `brands.images`.
    pub fn run_brands(&mut self) -> StageResult {
        if self.brands.is_some() {
            return Ok(());
        }
        let Some(images) = self.config.brands.images.clone() else {
            self.brands = Some(None);
            return Ok(());
        };
        let stage = in_stage("brands", self.brands_stage(&images))?;
        self.brands = Some(Some(stage));
        self.finish("brands");
        Ok(())
    }

    fn brands_stage(&mut self, images: &Path) -> Result<BrandStage> {
        let db = self.reference_db()?;
        let client = self.model_client()?;
        let path = self.resolve(images);
        let refs = read_images_csv(open(&path)?, &images.display().to_string())?;
        let decodes = decode_corpus(&refs, &db, client.as_ref(), self.config.brands.parallelism)?;
        let mut bytes = Vec::new();
        write_decoded_csv(&mut bytes, &decodes)?;
        self.out.write("brands_decoded.csv", &bytes)?;

        let mut counts: BTreeMap<String, BrandCounts> = BTreeMap::new();
        for d in &decodes {
            if let Some(p) = &d.point_id {
                *counts.entry(p.clone()).or_default() += sevi_core::brandsem::brand_counts(&d.assignments);
            }
        }
        self.out.write_table(
            "brand_counts.csv",
            &["point_id", "n_local", "n_global", "n_ordinary"],
            &pipeline::write_brand_counts(&counts),
        )?;

        let eval = match &self.config.brands.ground_truth {
            Some(gt) => {
                let truth = read_labels(&self.resolve(gt))?.canonicalized(&db);
                let report = evaluate(&predictions_to_labels(&decodes).canonicalized(&db), &truth)?;
                self.out.write_json("brand_eval.json", &report)?;
                self.out.write("brand_eval.txt", report.to_table().as_bytes())?;
                Some(report)
            }
            None => None,
        };
        Ok(BrandStage { decodes, counts, eval })
    }

    pub fn run_ingest(&mut self) -> StageResult {
        if self.ingested.is_some() {
            return Ok(());
        }
        self.run_brands()?;
        let decoded = self.brands.as_ref().and_then(|b| b.as_ref()).map(|b| &b.counts);
        let ingested = in_stage("ingest", pipeline::ingest(&self.config, &self.workdir, decoded))?;
        let t = &ingested.tables;
        let summary = json!({
            "points": t.points.len(),
            "segments": t.segments.len(),
            "anchors": t.anchors.len(),
            "pois": t.pois.len(),
            "lbs_observations": t.lbs.len(),
            "brand_source": match (&self.config.input.brand_counts, decoded) {
                (Some(p), _) => p.display().to_string(),
                (None, Some(_)) => "brands_decoded.csv".to_string(),
                (None, None) => "none".to_string(),
            },
            "inputs": ingested.inputs,
        });
        in_stage("ingest", self.out.write_json("ingest_summary.json", &summary))?;
        self.ingested = Some(ingested);
        self.finish("ingest");
        Ok(())
    }

    pub fn run_spillover(&mut self) -> StageResult {
        if self.spill.is_some() {
            return Ok(());
        }
        self.run_ingest()?;
        let tables = &self.ingested.as_ref().expect("ingested").tables;
        let spill = in_stage("spillover", pipeline::spillover(tables, &self.config.spillover.baseline()))?;
        let sigma: Vec<Vec<String>> = spill
            .sigma
            .entries
            .iter()
            .map(|(c, e)| vec![c.clone(), f6(e.sigma_m), e.provenance.name().into(), e.n_anchors.to_string()])
            .collect();
        let mv: Vec<Vec<String>> = tables
            .points
            .iter()
            .zip(&spill.point_mv)
            .map(|(p, v)| vec![p.id.clone(), p.segment_id.clone(), f6(*v)])
            .collect();
        in_stage("spillover", self.out.write_table("sigma.csv", &["category", "sigma_m", "provenance", "n_anchors"], &sigma))?;
        in_stage("spillover", self.out.write_table("mv.csv", &["point_id", "segment_id", "mv"], &mv))?;
        self.spill = Some(spill);
        self.finish("spillover");
        Ok(())
    }

    pub fn run_indicators(&mut self) -> StageResult {
        if self.table.is_some() {
            return Ok(());
        }
        self.run_spillover()?;
        let ing = self.ingested.as_ref().expect("ingested");
        let spill = self.spill.as_ref().expect("spillover");
        let table = in_stage(
            "indicators",
            pipeline::indicators(&ing.tables, &ing.brands, &spill.point_mv, &self.config.indicators),
        )?;
        let mut header = vec!["segment_id"];
        header.extend(IndicatorVector::NAMES);
        header.push("no_signboards");
        let rows: Vec<Vec<String>> = table
            .segment_ids
            .iter()
            .zip(&table.values)
            .map(|(id, v)| {
                let mut r = vec![id.clone()];
                r.extend(v.values.to_array().map(f6));
                r.push(if v.no_signboards { "1" } else { "0" }.into());
                r
            })
            .collect();
        in_stage("indicators", self.out.write_table("indicators.csv", &header, &rows))?;
        let br: Vec<Vec<String>> = ing
            .tables
            .points
            .iter()
            .zip(&table.point_br)
            .map(|(p, v)| vec![p.id.clone(), p.segment_id.clone(), f6(*v)])
            .collect();
        in_stage("indicators", self.out.write_table("point_brand_ratio.csv", &["point_id", "segment_id", "br"], &br))?;
        let meta = json!({
            "n_segments": table.segment_ids.len(),
            "n_segments_without_points": ing.tables.segments.len() - table.segment_ids.len(),
            "n_no_signboards": table.values.iter().filter(|v| v.no_signboards).count(),
            "smoothing": {
                "indicator": "br",
                "window": self.config.indicators.smoothing_window,
                "scope": "within_segment",
            },
            "brand_weights": self.config.indicators.brand_weights,
        });
        in_stage("indicators", self.out.write_json("indicators_meta.json", &meta))?;
        self.table = Some(table);
        self.finish("indicators");
        Ok(())
    }

    pub fn run_sevi(&mut self) -> StageResult {
        if self.sevi.is_some() {
            return Ok(());
        }
        self.run_indicators()?;
        let table = self.table.as_ref().expect("indicators");
        let stage = in_stage("sevi", pipeline::sevi(table))?;
        let r = in_stage("sevi", self.write_sevi(&stage));
        self.sevi = Some(stage);
        r?;
        self.finish("sevi");
        Ok(())
    }

    fn write_sevi(&mut self, stage: &SeviStage) -> Result<()> {
        let table = self.table.as_ref().expect("indicators");
        let m = &stage.matrix;
        let mut header = vec!["segment_id"];
        header.extend(ALIGNED_NAMES);
        let rows: Vec<Vec<String>> = m
            .segment_ids
            .iter()
            .zip(&m.rows)
            .map(|(id, r)| std::iter::once(id.clone()).chain(r.map(f6)).collect())
            .collect();
        self.out.write_table("normalized.csv", &header, &rows)?;

        let s = &stage.scores;
        self.out.write_json(
            "weights.json",
            &json!({
                "columns": m.columns,
                "weights": s.weights.weights,
                "blocks": DIMENSION_NAMES.iter().zip(&s.weights.blocks)
                    .map(|(n, b)| json!({"block": n, "entropies": b.entropies, "weights": b.weights}))
                    .collect::<Vec<_>>(),
                "ideal": s.result.ideal,
                "negative_ideal": s.result.negative,
            }),
        )?;

        let rows: Vec<Vec<String>> = (0..m.segment_ids.len())
            .map(|i| {
                let d = s.result.dims[i];
                vec![
                    m.segment_ids[i].clone(),
                    f6(d[0]),
                    f6(d[1]),
                    f6(d[2]),
                    f6(s.result.sevi[i]),
                    f6(s.alternatives.sevi_eq[i]),
                    f6(s.alternatives.sevi_pca[i]),
                ]
            })
            .collect();
        self.out.write_table("sevi.csv", &["segment_id", "A", "U", "P", "sevi", "sevi_eq", "sevi_pca"], &rows)?;

        let features: BTreeMap<String, FeatureScores> = (0..m.segment_ids.len())
            .map(|i| {
                (
                    m.segment_ids[i].clone(),
                    FeatureScores {
                        indicators: table.values[i].values,
                        dims: s.result.dims[i],
                        sevi: s.result.sevi[i],
                    },
                )
            })
            .collect();
        let points = &self.ingested.as_ref().expect("ingested").tables.points;
        self.out.write_json("sevi.geojson", &emit_geojson(points, &features))
    }

    pub fn run_stats(&mut self) -> StageResult {
        if self.stats.is_some() {
            return Ok(());
        }
        self.run_sevi()?;
        let ing = self.ingested.as_ref().expect("ingested");
        let table = self.table.as_ref().expect("indicators");
        let scores = &self.sevi.as_ref().expect("sevi").scores;
        let stats = in_stage(
            "stats",
            pipeline::stats(table, scores, &ing.tables.lbs, self.config.stats.pca_components),
        )?;
        let tiers = robustness::tier_validation(
            &ing.tables.points,
            &table.point_br,
            &ing.tables.pois,
            self.config.stats.poi_radius_m,
        )
        .map_err(|e| {
            log::warn!("external validation skipped: {e}");
            e.to_string()
        });
        in_stage("stats", self.write_stats(&stats, &tiers))?;
        self.stats = Some(stats);
        self.tiers = Some(tiers);
        self.finish("stats");
        Ok(())
    }

    fn write_stats(&mut self, stats: &StatsStage, tiers: &std::result::Result<TierValidation, String>) -> Result<()> {
        let c = &stats.correlation;
        let mut header = vec!["variable"];
        header.extend(c.labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = c
            .labels
            .iter()
            .zip(&c.values)
            .map(|(l, r)| std::iter::once(l.clone()).chain(r.iter().map(|v| f6(*v))).collect())
            .collect();
        self.out.write_table("correlation.csv", &header, &rows)?;

        let p = &stats.pca;
        let k = p.n_components;
        let comps: Vec<String> = (1..=k).map(|i| format!("PC{i}")).collect();
        let mut header = vec!["variable", "kind"];
        header.extend(comps.iter().map(String::as_str));
        let mut rows = Vec::new();
        for (kind, m) in [("raw", &p.loadings), ("rotated", &p.rotated)] {
            for (label, r) in p.labels.iter().zip(m.iter()) {
                let mut row = vec![label.clone(), kind.to_string()];
                row.extend(r.iter().take(k).map(|v| f6(*v)));
                rows.push(row);
            }
        }
        self.out.write_table("pca_loadings.csv", &header, &rows)?;
        self.out.write_json(
            "pca.json",
            &json!({
                "variables": p.labels,
                "eigenvalues": p.eigenvalues,
                "explained_variance_ratio": p.explained_variance_ratio,
                "n_components": k,
                "cumulative_variance": p.cumulative_variance(k),
                "varimax_iterations": p.varimax_iterations,
                "varimax_converged": p.varimax_converged,
            }),
        )?;
        match tiers {
            Ok(t) => self.out.write_json("kw.json", t),
            Err(reason) => self.out.write_json("kw.json", &json!({"skipped": reason})),
        }
    }

    pub fn run_gwr(&mut self) -> StageResult {
        if self.gwr.is_some() {
            return Ok(());
        }
        self.run_sevi()?;
        let ing = self.ingested.as_ref().expect("ingested");
        let table = self.table.as_ref().expect("indicators");
        let matrix = &self.sevi.as_ref().expect("sevi").matrix;
        let fits = in_stage("gwr", pipeline::gwr(table, matrix, &ing.tables.lbs, &self.config.gwr))?;
        in_stage("gwr", self.write_gwr(&fits))?;
        self.gwr = Some(fits);
        self.finish("gwr");
        Ok(())
    }

    fn write_gwr(&mut self, fits: &TimeSliced) -> Result<()> {
        let table = self.table.as_ref().expect("indicators");
        let mut summary = Vec::new();
        for pf in &fits.periods {
            let f = &pf.fit;
            let mut header: Vec<String> = ["segment_id", "x", "y", "uv", "fitted", "residual", "hat"]
                .map(String::from)
                .to_vec();
            header.extend(f.coefficient_names.iter().map(|n| format!("beta_{n}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = (0..f.n())
                .map(|i| {
                    let mut r = vec![
                        table.segment_ids[i].clone(),
                        f6(table.centroids[i][0]),
                        f6(table.centroids[i][1]),
                        f6(f.fitted[i] + f.residuals[i]),
                        f6(f.fitted[i]),
                        f6(f.residuals[i]),
                        f6(f.hat_diag[i]),
                    ];
                    r.extend(f.beta[i].iter().map(|v| f6(*v)));
                    r
                })
                .collect();
            self.out.write_table(&format!("gwr_{}.csv", pf.period.label()), &header, &rows)?;
            if f.ridge_count() > 0 {
                log::warn!("{}: {} local systems needed the ridge term", pf.period, f.ridge_count());
            }
            summary.push(json!({
                "period": pf.period,
                "bandwidth": f.bandwidth,
                "kernel": f.kernel,
                "selection": pf.selection,
                "trace_s": f.trace_s,
                "trace_sts": f.trace_sts,
                "p_eff": f.p_eff,
                "rss": f.rss,
                "tss": f.tss,
                "aicc": f.aicc,
                "adjusted_r2": f.adjusted_r2,
                "ridge_count": f.ridge_count(),
            }));
        }
        self.out.write_json(
            "gwr_summary.json",
            &json!({"periods": summary, "mean_adjusted_r2": fits.mean_adjusted_r2()}),
        )?;

        let names = &fits.periods[0].fit.coefficient_names;
        let mut rows = Vec::new();
        for var in names.iter().skip(1) {
            for s in coef_summary(&fits.periods, var)? {
                let b = &s.stats;
                rows.push(vec![
                    s.period.label().to_string(),
                    s.variable.clone(),
                    b.n.to_string(),
                    f6(b.mean),
                    f6(b.q1),
                    f6(b.median),
                    f6(b.q3),
                    f6(b.whisker_low),
                    f6(b.whisker_high),
                    b.outliers.len().to_string(),
                ]);
            }
        }
        self.out.write_table(
            "coef_summary.csv",
            &["period", "variable", "n", "mean", "q1", "median", "q3", "whisker_low", "whisker_high", "n_outliers"],
            &rows,
        )
    }

    pub fn run_robustness(&mut self) -> StageResult {
        if self.robustness.is_some() {
            return Ok(());
        }
        self.run_stats()?;
        self.run_gwr()?;
        let baseline = in_stage("robustness", r2_column(self.gwr.as_ref().expect("gwr")))?;
        let s = &self.sevi.as_ref().expect("sevi").scores;
        let report = in_stage(
            "robustness",
            robustness::run(
                &self.config,
                self.ingested.as_ref().expect("ingested"),
                self.spill.as_ref().expect("spillover"),
                &baseline,
                (&s.result.sevi, &s.alternatives.sevi_eq, &s.alternatives.sevi_pca),
                self.tiers.clone().and_then(|t| t.ok()),
            ),
        )?;
        in_stage("robustness", self.write_robustness(&report))?;
        self.robustness = Some(report);
        self.finish("robustness");
        Ok(())
    }

    fn write_robustness(&mut self, r: &RobustnessReport) -> Result<()> {
        for (name, grid) in [
            ("r2_thresholds.csv", &r.thresholds),
            ("r2_decays.csv", &r.decays),
            ("r2_kernels.csv", &r.kernels),
        ] {
            self.write_grid(name, grid)?;
        }
        let c = &r.index_correlation;
        let mut header = vec!["index"];
        header.extend(c.labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = c
            .labels
            .iter()
            .zip(&c.values)
            .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().map(|v| f6(*v))).collect())
            .collect();
        self.out.write_table("index_correlation.csv", &header, &rows)?;
        let rows: Vec<Vec<String>> = r
            .tier_validation
            .iter()
            .flat_map(|t| &t.rows)
            .map(|row| {
                vec![
                    row.outcome.clone(),
                    f6(row.low),
                    f6(row.mid),
                    f6(row.high),
                    row.growth.map(f6).unwrap_or_default(),
                    f6(row.kruskal_wallis.h),
                    row.kruskal_wallis.dof.to_string(),
                    format!("{:.6e}", row.kruskal_wallis.p_value),
                ]
            })
            .collect();
        self.out.write_table(
            "tier_validation.csv",
            &["outcome", "low", "mid", "high", "growth", "kw_h", "kw_dof", "kw_p"],
            &rows,
        )?;
        self.out.write_json("robustness.json", r)
    }

    fn write_grid(&mut self, name: &str, grid: &R2Grid) -> Result<()> {
        let mut header = vec!["period"];
        header.extend(grid.settings.iter().map(String::as_str));
        let mut rows: Vec<Vec<String>> = grid
            .periods
            .iter()
            .zip(&grid.values)
            .map(|(p, r)| std::iter::once(p.label().to_string()).chain(r.iter().map(|v| f6(*v))).collect())
            .collect();
        rows.push(std::iter::once("mean".to_string()).chain(grid.column_means().into_iter().map(f6)).collect());
        self.out.write_table(name, &header, &rows)
    }

    pub fn run_report(&mut self) -> StageResult {
        self.run_robustness()?;
        let text = report::render(self);
        in_stage("report", self.out.write("report.txt", text.as_bytes()))?;
        self.finish("report");
        Ok(())
    }

    /// Every stage, then `manifest.json`.
    pub fn run_all(&mut self) -> StageResult<Manifest> {
        self.run_report()?;
        let inputs = self.ingested.as_ref().expect("ingested").inputs.clone();
        let manifest = Manifest::new(self.config.hash(), inputs, self.stages.clone());
        in_stage("manifest", manifest.write(&self.out.path("manifest.json")))?;
        Ok(manifest)
    }
}
