//! Plain-text summary of a run.

use std::fmt::Write;

use sevi_core::geodata::Period;
use sevi_core::scoring::{ALIGNED_NAMES, DIMENSION_NAMES};

use crate::robustness::{R2Grid, TierValidation};
use crate::runner::Runner;

fn rule(out: &mut String, width: usize) {
    out.push_str(&"-".repeat(width));
    out.push('\n');
}

fn title(out: &mut String, text: &str) {
    let _ = writeln!(out, "\n{text}");
    rule(out, text.len().max(40));
}

/// Adjusted R² grid with periods as rows and a closing mean row.
pub fn r2_table(grid: &R2Grid) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<26}", "Time period");
    for s in &grid.settings {
        let _ = write!(out, "{s:>14}");
    }
    out.push('\n');
    for (p, row) in grid.periods.iter().zip(&grid.values) {
        let _ = write!(out, "{:<26}", p.description());
        for v in row {
            let _ = write!(out, "{v:>14.4}");
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<26}", "Mean");
    for v in grid.column_means() {
        let _ = write!(out, "{v:>14.4}");
    }
    out.push('\n');
    out
}

/// Tertile means, growth and Kruskal-Wallis p for each outcome.
pub fn tier_table(t: &TierValidation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} of {} points have a POI within {} m; tier sizes {:?}",
        t.n_active, t.n_points, t.radius_m, t.tier_sizes
    );
    let _ = writeln!(
        out,
        "{:<16}{:>10}{:>10}{:>10}{:>12}{:>12}",
        "Outcome", "Low", "Mid", "High", "Growth", "KW p"
    );
    for r in &t.rows {
        let growth = r.growth.map_or("n/a".to_string(), |g| format!("{:+.1}%", g * 100.0));
        let _ = writeln!(
            out,
            "{:<16}{:>10.2}{:>10.2}{:>10.2}{:>12}{:>12.3e}",
            r.outcome, r.low, r.mid, r.high, growth, r.kruskal_wallis.p_value
        );
    }
    out
}

pub fn render(run: &Runner) -> String {
    let mut out = String::from("Street economic vitality report\n");
    let _ = writeln!(out, "config sha256 {}", run.config.hash());

    if let Some(Some(b)) = &run.brands {
        title(&mut out, &format!("Brand decoding ({} images)", b.decodes.len()));
        let flagged = b.decodes.iter().flat_map(|d| &d.assignments).filter(|a| a.flagged).count();
        let _ = writeln!(out, "flagged fallback assignments: {flagged}");
        if let Some(e) = &b.eval {
            out.push_str(&e.to_table());
        }
    }

    if let Some(ing) = &run.ingested {
        let t = &ing.tables;
        title(&mut out, "Inputs");
        let _ = writeln!(
            out,
            "{} points, {} segments, {} anchors, {} POIs, {} LBS observations",
            t.points.len(),
            t.segments.len(),
            t.anchors.len(),
            t.pois.len(),
            t.lbs.len()
        );
    }

    if let Some(s) = &run.spill {
        title(&mut out, "Spillover bandwidths");
        for (c, e) in &s.sigma.entries {
            let _ = writeln!(out, "{c:<20}{:>12.1} m  {} (n = {})", e.sigma_m, e.provenance.name(), e.n_anchors);
        }
    }

    if let Some(sv) = &run.sevi {
        title(&mut out, "Entropy weights");
        let w = &sv.scores.weights.weights;
        let mut j = 0;
        for (b, name) in DIMENSION_NAMES.iter().enumerate() {
            let parts: Vec<String> = w
                .block(b)
                .iter()
                .map(|v| {
                    let s = format!("{}={v:.4}", ALIGNED_NAMES[j]);
                    j += 1;
                    s
                })
                .collect();
            let _ = writeln!(out, "{name}: {}", parts.join("  "));
        }
        let sevi = &sv.scores.result.sevi;
        let mean = sevi.iter().sum::<f64>() / sevi.len() as f64;
        let (lo, hi) = sevi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let _ = writeln!(out, "SEVI over {} segments: mean {mean:.4}, min {lo:.4}, max {hi:.4}", sevi.len());
    }

    if let Some(st) = &run.stats {
        let p = &st.pca;
        title(&mut out, "Varimax-rotated factor loadings");
        let _ = write!(out, "{:<10}", "Variable");
        for k in 1..=p.n_components {
            let _ = write!(out, "{:>10}", format!("PC{k}"));
        }
        out.push('\n');
        for (l, r) in p.labels.iter().zip(&p.rotated) {
            let _ = write!(out, "{l:<10}");
            for v in r.iter().take(p.n_components) {
                let _ = write!(out, "{v:>10.3}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "cumulative variance explained: {:.1}%",
            100.0 * p.cumulative_variance(p.n_components)
        );
    }

    if let Some(g) = &run.gwr {
        title(&mut out, "GWR by tidal period");
        let _ = writeln!(out, "{:<26}{:>22}{:>12}{:>10}", "Time period", "Bandwidth", "Adj. R2", "AICc");
        for pf in &g.periods {
            let r2 = pf.fit.adjusted_r2.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                out,
                "{:<26}{:>22}{:>12}{:>10.1}",
                pf.period.description(),
                pf.fit.bandwidth.to_string(),
                r2,
                pf.fit.aicc
            );
        }
        if let Some(m) = g.mean_adjusted_r2() {
            let _ = writeln!(out, "mean adjusted R2: {m:.4}");
        }
        let low = g
            .periods
            .iter()
            .filter_map(|p| p.fit.adjusted_r2.map(|r| (p.period, r)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((p, r)) = low {
            let _ = writeln!(out, "lowest explanatory power: {} ({r:.4})", Period::description(p));
        }
    }

    if let Some(r) = &run.robustness {
        title(&mut out, "Adjusted R2 under spillover thresholds");
        out.push_str(&r2_table(&r.thresholds));
        title(&mut out, "Adjusted R2 under decay functions");
        out.push_str(&r2_table(&r.decays));
        title(&mut out, "Adjusted R2 under GWR kernels");
        out.push_str(&r2_table(&r.kernels));
        title(&mut out, "Spearman correlation of alternative indices");
        let c = &r.index_correlation;
        let _ = write!(out, "{:<10}", "");
        for l in &c.labels {
            let _ = write!(out, "{l:>10}");
        }
        out.push('\n');
        for (l, row) in c.labels.iter().zip(&c.values) {
            let _ = write!(out, "{l:<10}");
            for v in row {
                let _ = write!(out, "{v:>10.3}");
            }
            out.push('\n');
        }
    }

    match run.tiers.as_ref() {
        Some(Ok(t)) => {
            title(&mut out, "Brand ratio tertiles against POI data");
            out.push_str(&tier_table(t));
        }
        Some(Err(reason)) => {
            title(&mut out, "Brand ratio tertiles against POI data");
            let _ = writeln!(out, "skipped: {reason}");
        }
        None => {}
    }
    out
}
