//! Geographically weighted regression with per-location weighted least
//! squares, exact hat-matrix traces, AICc bandwidth selection and
//! per-period (time-sliced) fitting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, FullPivLU};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::Period;
use crate::stats::quantile_sorted;

/// Ratio of smallest to largest pivot below which a local system counts as
/// near-singular and gets the ridge term.
const PIVOT_RATIO_RIDGE: f64 = 1e-12;
/// Ratio below which the system is still unusable after the ridge term.
const PIVOT_RATIO_FAIL: f64 = 1e-15;
const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Bisquare,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Bisquare => "bisquare",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Kernel::Gaussian),
            "bisquare" => Ok(Kernel::Bisquare),
            other => Err(Error::Config(format!("unknown kernel `{other}` (gaussian | bisquare)"))),
        }
    }
}

/// Kernel weight for distance `d` at bandwidth `b` (both in meters).
pub fn kernel_weight(kernel: Kernel, d: f64, b: f64) -> f64 {
    debug_assert!(d >= 0.0 && b > 0.0);
    let u = d / b;
    match kernel {
        Kernel::Gaussian => (-0.5 * u * u).exp(),
        Kernel::Bisquare => {
            if u < 1.0 {
                let t = 1.0 - u * u;
                t * t
            } else {
                0.0
            }
        }
    }
}

/// Fixed bandwidth in meters, or adaptive: the distance to the m-th nearest
/// observation (the regression point itself counts as the first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum Bandwidth {
    Fixed(f64),
    Adaptive(usize),
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Fixed(b) => write!(f, "{b:.3} m"),
            Bandwidth::Adaptive(m) => write!(f, "{m} neighbours"),
        }
    }
}

/// Effective number of parameters used in adjusted R².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveDof {
    /// 2 tr(S) - tr(SᵀS)
    #[default]
    TwoTraceMinusTraceSts,
    /// tr(S)
    TraceS,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GwrDesign {
    pub coords: Vec<[f64; 2]>,
    /// Predictor names, without the intercept.
    pub names: Vec<String>,
    /// Row-major n × (k+1) design with the intercept in column 0.
    x: Vec<f64>,
    pub y: Vec<f64>,
    pub kernel: Kernel,
    pub dof: EffectiveDof,
}

impl GwrDesign {
    /// `rows` holds the k predictors of each observation; the intercept is
    /// prepended here.
    pub fn new(coords: Vec<[f64; 2]>, rows: &[Vec<f64>], y: Vec<f64>, names: Vec<String>, kernel: Kernel) -> Result<Self> {
        let n = coords.len();
        let k = names.len();
        if rows.len() != n || y.len() != n {
            return Err(Error::InsufficientData(format!(
                "design has {n} coordinates, {} predictor rows and {} responses",
                rows.len(),
                y.len()
            )));
        }
        if n <= k + 2 {
            return Err(Error::InsufficientData(format!("GWR needs n > k + 2, got n = {n}, k = {k}")));
        }
        if coords.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InsufficientData("GWR coordinates must be finite".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InsufficientData("GWR response contains non-finite values".into()));
        }
        let p = k + 1;
        let mut x = Vec::with_capacity(n * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::InsufficientData(format!("predictor row {i} has {} values, expected {k}", r.len())));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::InsufficientData(format!("predictor `{}` is non-finite in row {i}", names[j])));
            }
            x.push(1.0);
            x.extend_from_slice(r);
        }
        for j in 0..k {
            let first = rows[0][j];
            if rows.iter().all(|r| r[j] == first) {
                return Err(Error::InsufficientData(format!("predictor `{}` is constant", names[j])));
            }
        }
        Ok(GwrDesign {
            coords,
            names,
            x,
            y,
            kernel,
            dof: EffectiveDof::default(),
        })
    }

    pub fn with_dof(mut self, dof: EffectiveDof) -> Self {
        self.dof = dof;
        self
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of coefficients including the intercept.
    pub fn n_coefficients(&self) -> usize {
        self.names.len() + 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_coefficients();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn coefficient_names(&self) -> Vec<String> {
        std::iter::once("intercept".to_string()).chain(self.names.iter().cloned()).collect()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Smallest nonzero and largest pairwise distance.
    pub fn distance_range(&self) -> (f64, f64) {
        let n = self.n();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for j in (i + 1)..n {
                    let d = self.distance(i, j);
                    if d > 0.0 {
                        lo = lo.min(d);
                    }
                    hi = hi.max(d);
                }
                (lo, hi)
            })
            .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    fn local_bandwidth(&self, i: usize, bw: Bandwidth) -> f64 {
        match bw {
            Bandwidth::Fixed(b) => b,
            Bandwidth::Adaptive(m) => {
                let mut d: Vec<f64> = (0..self.n()).map(|j| self.distance(i, j)).collect();
                let m = m.clamp(1, d.len());
                let (_, nth, _) = d.select_nth_unstable_by(m - 1, f64::total_cmp);
                let b = *nth;
                if b > 0.0 {
                    b
                } else {
                    // all m nearest coincide with the regression point
                    d.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min).min(f64::MAX)
                }
            }
        }
    }
}

/// Result of fitting one location.
struct LocalFit {
    beta: Vec<f64>,
    fitted: f64,
    hat_diag: f64,
    hat_row_norm2: f64,
    ridge: bool,
}

fn fit_location(design: &GwrDesign, i: usize, bw: Bandwidth, row_norms: bool) -> Result<LocalFit> {
    let n = design.n();
    let p = design.n_coefficients();
    let b = design.local_bandwidth(i, bw);
    let w: Vec<f64> = (0..n).map(|j| kernel_weight(design.kernel, design.distance(i, j), b)).collect();

    let mut m = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DMatrix::<f64>::zeros(p, 2);
    for j in 0..n {
        let wj = w[j];
        if wj == 0.0 {
            continue;
        }
        let xj = design.row(j);
        for a in 0..p {
            let wa = wj * xj[a];
            for c in a..p {
                m[(a, c)] += wa * xj[c];
            }
            rhs[(a, 0)] += wa * design.y[j];
        }
    }
    for a in 0..p {
        for c in 0..a {
            m[(a, c)] = m[(c, a)];
        }
    }
    let xi = design.row(i);
    for a in 0..p {
        rhs[(a, 1)] = xi[a];
    }

    let pivot_ratio = |lu: &FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>| {
        let u = lu.u();
        let diag: Vec<f64> = (0..p).map(|a| u[(a, a)].abs()).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if max > 0.0 {
            min / max
        } else {
            0.0
        }
    };
    let mut lu = FullPivLU::new(m.clone());
    let mut ridge = false;
    if pivot_ratio(&lu) < PIVOT_RATIO_RIDGE {
        let lambda = RIDGE_SCALE * m.trace() / p as f64;
        let mut mr = m;
        for a in 0..p {
            mr[(a, a)] += lambda;
        }
        lu = FullPivLU::new(mr);
        ridge = true;
        if pivot_ratio(&lu) < PIVOT_RATIO_FAIL {
            return Err(Error::SingularSystem { index: i });
        }
    }
    let sol = lu.solve(&rhs).ok_or(Error::SingularSystem { index: i })?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { index: i });
    }
    let beta: Vec<f64> = sol.column(0).iter().copied().collect();
    let c: Vec<f64> = sol.column(1).iter().copied().collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let fitted = dot(xi, &beta);
    // s_ij = w_j x_jᵀ (XᵀW_iX)⁻¹ x_i
    let hat_diag = w[i] * dot(xi, &c);
    let hat_row_norm2 = if row_norms {
        (0..n)
            .filter(|&j| w[j] != 0.0)
            .map(|j| {
                let s = w[j] * dot(design.row(j), &c);
                s * s
            })
            .sum()
    } else {
        0.0
    };
    Ok(LocalFit {
        beta,
        fitted,
        hat_diag,
        hat_row_norm2,
        ridge,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwrFit {
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
    pub coefficient_names: Vec<String>,
    /// n × (k+1) local coefficients, intercept first.
    pub beta: Vec<Vec<f64>>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub hat_diag: Vec<f64>,
    pub trace_s: f64,
    pub trace_sts: f64,
    pub rss: f64,
    pub tss: f64,
    pub p_eff: f64,
    /// `None` when n ≤ p_eff.
    pub adjusted_r2: Option<f64>,
    pub aicc: f64,
    /// Locations whose local system needed the ridge term.
    pub ridge_flags: Vec<bool>,
}

impl GwrFit {
    pub fn n(&self) -> usize {
        self.fitted.len()
    }

    pub fn ridge_count(&self) -> usize {
        self.ridge_flags.iter().filter(|f| **f).count()
    }

    pub fn coefficient(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.coefficient_names.iter().position(|c| c == name)?;
        Some(self.beta.iter().map(|b| b[j]).collect())
    }
}

fn total_sum_of_squares(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// `1 - [rss / (n - p_eff)] / [tss / (n - 1)]`.
pub fn adjusted_r2(rss: f64, tss: f64, n: usize, p_eff: f64) -> Result<f64> {
    let nf = n as f64;
    if nf <= p_eff || n < 2 {
        return Err(Error::UndefinedR2 { n, p_eff });
    }
    if tss <= 0.0 {
        return Err(Error::UndefinedR2 { n, p_eff });
    }
    Ok(1.0 - (rss / (nf - p_eff)) / (tss / (nf - 1.0)))
}

/// Corrected Akaike criterion; `+inf` when `n - 2 - tr(S) ≤ 0`.
pub fn aicc(rss: f64, n: usize, trace_s: f64) -> f64 {
    let nf = n as f64;
    let denom = nf - 2.0 - trace_s;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    nf * (rss / nf).ln() + nf * (2.0 * std::f64::consts::PI).ln() + nf * (nf + trace_s) / denom
}

/// Fits every location at the given bandwidth.
pub fn fit_local(design: &GwrDesign, bandwidth: Bandwidth) -> Result<GwrFit> {
    validate_bandwidth(design, bandwidth)?;
    let locals: Vec<LocalFit> = (0..design.n())
        .into_par_iter()
        .map(|i| fit_location(design, i, bandwidth, true))
        .collect::<Result<_>>()?;
    let n = design.n();
    let mut beta = Vec::with_capacity(n);
    let mut fitted = Vec::with_capacity(n);
    let mut hat_diag = Vec::with_capacity(n);
    let mut ridge_flags = Vec::with_capacity(n);
    let (mut trace_s, mut trace_sts) = (0.0, 0.0);
    for l in locals {
        trace_s += l.hat_diag;
        trace_sts += l.hat_row_norm2;
        beta.push(l.beta);
        fitted.push(l.fitted);
        hat_diag.push(l.hat_diag);
        ridge_flags.push(l.ridge);
    }
    let residuals: Vec<f64> = design.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss = residuals.iter().map(|r| r * r).sum();
    let tss = total_sum_of_squares(&design.y);
    let p_eff = match design.dof {
        EffectiveDof::TwoTraceMinusTraceSts => 2.0 * trace_s - trace_sts,
        EffectiveDof::TraceS => trace_s,
    };
    let flagged = ridge_flags.iter().filter(|f| **f).count();
    if flagged > 0 {
        log::warn!("{flagged} of {n} local systems needed the ridge fallback at bandwidth {bandwidth}");
    }
    Ok(GwrFit {
        bandwidth,
        kernel: design.kernel,
        coefficient_names: design.coefficient_names(),
        beta,
        fitted,
        residuals,
        hat_diag,
        trace_s,
        trace_sts,
        rss,
        tss,
        p_eff,
        adjusted_r2: adjusted_r2(rss, tss, n, p_eff).ok(),
        aicc: aicc(rss, n, trace_s),
        ridge_flags,
    })
}

fn validate_bandwidth(design: &GwrDesign, bw: Bandwidth) -> Result<()> {
    match bw {
        Bandwidth::Fixed(b) if !(b > 0.0 && b.is_finite()) => {
            Err(Error::Config(format!("fixed bandwidth must be positive and finite, got {b}")))
        }
        Bandwidth::Adaptive(m) if m < 2 || m > design.n() => Err(Error::Config(format!(
            "adaptive bandwidth must be between 2 and n = {}, got {m}",
            design.n()
        ))),
        _ => Ok(()),
    }
}

/// AICc at `bandwidth` without the tr(SᵀS) pass. Singular fits count as `+inf`.
pub fn aicc_at(design: &GwrDesign, bandwidth: Bandwidth) -> Result<f64> {
    validate_bandwidth(design, bandwidth)?;
    let locals: Result<Vec<(f64, f64)>> = (0..design.n())
        .into_par_iter()
        .map(|i| fit_location(design, i, bandwidth, false).map(|l| (l.fitted, l.hat_diag)))
        .collect();
    let locals = match locals {
        Ok(v) => v,
        Err(Error::SingularSystem { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let mut rss = 0.0;
    let mut trace_s = 0.0;
    for (i, (f, h)) in locals.into_iter().enumerate() {
        rss += (design.y[i] - f) * (design.y[i] - f);
        trace_s += h;
    }
    Ok(aicc(rss, design.n(), trace_s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchBoundary {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub bandwidth: Bandwidth,
    pub aicc: f64,
    /// Set when the criterion was minimized at an end of the search interval.
    pub boundary: Option<SearchBoundary>,
    pub lower: f64,
    pub upper: f64,
    pub evaluations: usize,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the AICc-minimizing bandwidth. Fixed kernels
/// search `[min nonzero pairwise distance, diameter]`; adaptive kernels
/// search neighbour counts in `[k + 2, n]`.
pub fn select_bandwidth(design: &GwrDesign, adaptive: bool) -> Result<BandwidthSelection> {
    let (lower, upper) = if adaptive {
        ((design.n_coefficients() + 1) as f64, design.n() as f64)
    } else {
        let (lo, hi) = design.distance_range();
        if !(lo.is_finite() && hi > lo) {
            return Err(Error::InsufficientData("bandwidth search needs at least two distinct locations".into()));
        }
        (lo, hi)
    };
    let to_bw = |v: f64| {
        if adaptive {
            Bandwidth::Adaptive(v.round() as usize)
        } else {
            Bandwidth::Fixed(v)
        }
    };
    let key = |v: f64| if adaptive { v.round() } else { v };
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    let mut eval = |v: f64| -> Result<f64> {
        let v = key(v);
        if let Some(f) = cache.get(&v.to_bits()) {
            return Ok(*f);
        }
        let f = aicc_at(design, to_bw(v))?;
        cache.insert(v.to_bits(), f);
        Ok(f)
    };
    let tol = if adaptive { 1.0 } else { 1e-4 * (upper - lower) };
    let (mut a, mut b) = (lower, upper);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = eval(d)?;
        }
    }
    let (mut best, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut boundary = None;
    let f_lo = eval(lower)?;
    let f_hi = eval(upper)?;
    if f_hi <= best_f {
        best = upper;
        best_f = f_hi;
        boundary = Some(SearchBoundary::Upper);
    }
    if f_lo < best_f {
        best = lower;
        best_f = f_lo;
        boundary = Some(SearchBoundary::Lower);
    }
    let bandwidth = to_bw(best);
    if let Some(side) = boundary {
        log::warn!("AICc is minimized at the {side:?} end of the search interval; using bandwidth {bandwidth}");
    }
    Ok(BandwidthSelection {
        bandwidth,
        aicc: best_f,
        boundary,
        lower,
        upper,
        evaluations: cache.len(),
    })
}

/// How each period's bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthChoice {
    Fixed(f64),
    Adaptive(usize),
    SelectFixed,
    SelectAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFit {
    pub period: Period,
    pub selection: Option<BandwidthSelection>,
    pub fit: GwrFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSliced {
    /// One fit per period in canonical order.
    pub periods: Vec<PeriodFit>,
}

impl TimeSliced {
    pub fn r2_trajectory(&self) -> Vec<(Period, Option<f64>)> {
        self.periods.iter().map(|p| (p.period, p.fit.adjusted_r2)).collect()
    }

    pub fn mean_adjusted_r2(&self) -> Option<f64> {
        let v: Option<Vec<f64>> = self.periods.iter().map(|p| p.fit.adjusted_r2).collect();
        v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn get(&self, period: Period) -> Option<&PeriodFit> {
        self.periods.iter().find(|p| p.period == period)
    }
}

pub fn fit_with_choice(design: &GwrDesign, choice: BandwidthChoice) -> Result<(Option<BandwidthSelection>, GwrFit)> {
    let (selection, bw) = match choice {
        BandwidthChoice::Fixed(b) => (None, Bandwidth::Fixed(b)),
        BandwidthChoice::Adaptive(m) => (None, Bandwidth::Adaptive(m)),
        BandwidthChoice::SelectFixed | BandwidthChoice::SelectAdaptive => {
            let s = select_bandwidth(design, choice == BandwidthChoice::SelectAdaptive)?;
            let bw = s.bandwidth;
            (Some(s), bw)
        }
    };
    Ok((selection, fit_local(design, bw)?))
}

/// Independent fits for all eight periods, returned in canonical order.
pub fn time_sliced(designs: &[(Period, GwrDesign)], choice: BandwidthChoice) -> Result<TimeSliced> {
    let mut by_period: BTreeMap<Period, &GwrDesign> = BTreeMap::new();
    for (p, d) in designs {
        if by_period.insert(*p, d).is_some() {
            return Err(Error::Config(format!("period `{p}` supplied twice")));
        }
    }
    let mut periods = Vec::with_capacity(Period::ALL.len());
    for p in Period::ALL {
        let design = by_period.get(&p).ok_or_else(|| Error::MissingPeriod(p.label().to_string()))?;
        let (selection, fit) = fit_with_choice(design, choice)?;
        log::info!(
            "period {p}: bandwidth {}, adjusted R2 {:?}",
            fit.bandwidth,
            fit.adjusted_r2
        );
        periods.push(PeriodFit { period: p, selection, fit });
    }
    Ok(TimeSliced { periods })
}

/// Tukey boxplot statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Most extreme observations within 1.5 IQR of the box.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

pub fn boxplot(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::InsufficientData("boxplot of no values".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || s.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence);
    Ok(BoxStats {
        n: s.len(),
        mean: s.iter().sum::<f64>() / s.len() as f64,
        q1,
        median,
        q3,
        whisker_low: inside().fold(f64::INFINITY, f64::min),
        whisker_high: inside().fold(f64::NEG_INFINITY, f64::max),
        outliers: s.iter().copied().filter(|v| *v < lo_fence || *v > hi_fence).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefSummary {
    pub period: Period,
    pub variable: String,
    pub stats: BoxStats,
}

/// Distribution of one local coefficient across locations, per period.
pub fn coef_summary(fits: &[PeriodFit], variable: &str) -> Result<Vec<CoefSummary>> {
    fits.iter()
        .map(|pf| {
            let values = pf
                .fit
                .coefficient(variable)
                .ok_or_else(|| Error::Config(format!("unknown GWR coefficient `{variable}`")))?;
            Ok(CoefSummary {
                period: pf.period,
                variable: variable.to_string(),
                stats: boxplot(&values)?,
            })
        })
        .collect()
}
