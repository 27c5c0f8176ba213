//! Sensitivity sweeps, alternative-index agreement and the brand-ratio
//! external validation.

use serde::Serialize;
use sevi_core::geodata::{filter_active, radius_join, Period, PoiRecord, SamplingPoint};
use sevi_core::gwr::{Kernel, TimeSliced};
use sevi_core::spillover::{Decay, SpilloverConfig};
use sevi_core::stats::{kruskal_wallis, spearman_matrix, tertile_split, CorrelationMatrix, KwResult, Tier};
use sevi_core::{Error, Result};

use crate::config::PipelineConfig;
use crate::pipeline::{self, Ingested, SpilloverStage};

/// Relative growth from the low tier to the high tier; `None` when the low
/// mean is zero.
pub fn growth(low: f64, high: f64) -> Option<f64> {
    (low != 0.0).then(|| (high - low) / low)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Adjusted R² per period in canonical order; an undefined value is an error.
pub fn r2_column(fits: &TimeSliced) -> Result<Vec<f64>> {
    fits.periods
        .iter()
        .map(|p| {
            p.fit.adjusted_r2.ok_or(Error::UndefinedR2 {
                n: p.fit.n(),
                p_eff: p.fit.p_eff,
            })
        })
        .collect()
}

/// Adjusted R² grid: one column per setting, one row per period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct R2Grid {
    pub settings: Vec<String>,
    pub periods: Vec<Period>,
    /// `values[period][setting]`.
    pub values: Vec<Vec<f64>>,
}

impl R2Grid {
    pub fn from_columns(settings: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        let periods = Period::ALL.to_vec();
        if columns.len() != settings.len() || columns.iter().any(|c| c.len() != periods.len()) {
            return Err(Error::InsufficientData("robustness grid has missing cells".into()));
        }
        let values = (0..periods.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        Ok(R2Grid {
            settings,
            periods,
            values,
        })
    }

    pub fn column_means(&self) -> Vec<f64> {
        (0..self.settings.len())
            .map(|j| mean(&self.values.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect()
    }
}

/// Mean of a tertile for one outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierRow {
    pub outcome: String,
    pub low: f64,
    pub mid: f64,
    pub high: f64,
    pub growth: Option<f64>,
    pub kruskal_wallis: KwResult,
}

impl TierRow {
    /// Builds a row from per-tier samples of `outcome`.
    pub fn from_groups(outcome: &str, groups: [Vec<f64>; 3]) -> Result<Self> {
        let means = groups.clone().map(|g| if g.is_empty() { f64::NAN } else { mean(&g) });
        let nonempty: Vec<Vec<f64>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
        if nonempty.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "`{outcome}`: tertile split produced fewer than two nonempty tiers"
            )));
        }
        Ok(TierRow {
            outcome: outcome.to_string(),
            low: means[0],
            mid: means[1],
            high: means[2],
            growth: growth(means[0], means[2]),
            kruskal_wallis: kruskal_wallis(&nonempty)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierValidation {
    pub radius_m: f64,
    pub n_points: usize,
    pub n_active: usize,
    pub tier_sizes: [usize; 3],
    pub rows: Vec<TierRow>,
}

/// Joins POIs within `radius` of each point, keeps points with at least one
/// POI, splits them into brand-ratio tertiles and compares POI density and
/// premium share across tiers.
pub fn tier_validation(
    points: &[SamplingPoint],
    point_br: &[f64],
    pois: &[PoiRecord],
    radius: f64,
) -> Result<TierValidation> {
    let joined = radius_join(points, pois, radius);
    let active = filter_active(&joined);
    if active.count() < 5 {
        return Err(Error::InsufficientData(format!(
            "only {} points have a POI within {radius} m",
            active.count()
        )));
    }
    let br: Vec<f64> = active.indices.iter().map(|&i| point_br[i]).collect();
    let tiers = tertile_split(&br)?;
    let slot = |t: Tier| match t {
        Tier::Low => 0,
        Tier::Mid => 1,
        Tier::High => 2,
    };
    let mut density: [Vec<f64>; 3] = Default::default();
    let mut premium: [Vec<f64>; 3] = Default::default();
    for (&i, &t) in active.indices.iter().zip(&tiers) {
        let list = &joined[i];
        density[slot(t)].push(list.len() as f64);
        premium[slot(t)].push(list.iter().filter(|&&k| pois[k].is_premium).count() as f64);
    }
    let tier_sizes = [density[0].len(), density[1].len(), density[2].len()];
    Ok(TierValidation {
        radius_m: radius,
        n_points: points.len(),
        n_active: active.count(),
        tier_sizes,
        rows: vec![
            TierRow::from_groups("poi_count", density)?,
            TierRow::from_groups("premium_count", premium)?,
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub thresholds: R2Grid,
    pub decays: R2Grid,
    /// Baseline settings re-fitted under each GWR kernel.
    pub kernels: R2Grid,
    pub index_correlation: CorrelationMatrix,
    pub tier_validation: Option<TierValidation>,
}

pub fn index_correlation(sevi: &[f64], sevi_eq: &[f64], sevi_pca: &[f64]) -> Result<CorrelationMatrix> {
    spearman_matrix(
        &["sevi", "sevi_eq", "sevi_pca"],
        &[sevi.to_vec(), sevi_eq.to_vec(), sevi_pca.to_vec()],
    )
}

/// Re-runs indicators, scoring and GWR under each swept spillover setting
/// and GWR kernel. Settings equal to the baseline reuse `baseline_r2`.
pub fn run(
    config: &PipelineConfig,
    ingested: &Ingested,
    spill: &SpilloverStage,
    baseline_r2: &[f64],
    scores: (&[f64], &[f64], &[f64]),
    tiers: Option<TierValidation>,
) -> Result<RobustnessReport> {
    let base = config.spillover.baseline();
    let refit = |sc: SpilloverConfig, kernel: Kernel| -> Result<Vec<f64>> {
        if sc == base && kernel == config.gwr.kernel {
            return Ok(baseline_r2.to_vec());
        }
        sc.validate()?;
        let mv = spill.field.values(&ingested.tables.points, &sc);
        let table = pipeline::indicators(&ingested.tables, &ingested.brands, &mv, &config.indicators)?;
        let stage = pipeline::sevi(&table)?;
        let mut gwr = config.gwr.clone();
        gwr.kernel = kernel;
        r2_column(&pipeline::gwr(&table, &stage.matrix, &ingested.tables.lbs, &gwr)?)
    };

    let mut cols = Vec::new();
    for &d in &config.spillover.sweep_thresholds {
        log::info!("robustness: threshold {d} m");
        cols.push(refit(SpilloverConfig { threshold_m: d, ..base }, config.gwr.kernel)?);
    }
    let names = config.spillover.sweep_thresholds.iter().map(|d| format!("{d}m")).collect();
    let thresholds = R2Grid::from_columns(names, &cols)?;

    let mut cols = Vec::new();
    for &decay in &config.spillover.sweep_decays {
        log::info!("robustness: {} decay", decay.name());
        cols.push(refit(SpilloverConfig { decay, ..base }, config.gwr.kernel)?);
    }
    let names = config.spillover.sweep_decays.iter().map(|d: &Decay| d.name().to_string()).collect();
    let decays = R2Grid::from_columns(names, &cols)?;

    let mut cols = Vec::new();
    for kernel in [Kernel::Gaussian, Kernel::Bisquare] {
        log::info!("robustness: {} kernel", kernel.name());
        cols.push(refit(base, kernel)?);
    }
    let kernels = R2Grid::from_columns(vec!["gaussian".into(), "bisquare".into()], &cols)?;

    Ok(RobustnessReport {
        thresholds,
        decays,
        kernels,
        index_correlation: index_correlation(scores.0, scores.1, scores.2)?,
        tier_validation: tiers,
    })
}
