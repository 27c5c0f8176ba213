use serde::{Deserialize, Serialize};

use super::gamma::chi_square_sf;
use super::rank::{average_ranks, tie_runs};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    /// Tie-corrected H statistic.
    pub h: f64,
    pub dof: usize,
    pub p_value: f64,
    /// 1 - sum(t^3 - t) / (N^3 - N).
    pub tie_correction: f64,
}

/// Kruskal-Wallis rank test across two or more groups.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KwResult> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData("kruskal-wallis needs at least two groups".into()));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InsufficientData("kruskal-wallis groups must be nonempty".into()));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!("kruskal-wallis needs N >= 5, got {n}")));
    }
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("kruskal-wallis input contains non-finite values".into()));
    }
    let dof = groups.len() - 1;
    let nf = n as f64;
    let ties: f64 = tie_runs(&pooled)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let tie_correction = 1.0 - ties / (nf * nf * nf - nf);
    if tie_correction <= 0.0 {
        // every value identical
        return Ok(KwResult {
            h: 0.0,
            dof,
            p_value: 1.0,
            tie_correction: 0.0,
        });
    }
    let ranks = average_ranks(&pooled);
    let mut offset = 0;
    let mut sum_term = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum_term += r * r / g.len() as f64;
        offset += g.len();
    }
    let h_raw = 12.0 / (nf * (nf + 1.0)) * sum_term - 3.0 * (nf + 1.0);
    let h = (h_raw / tie_correction).max(0.0);
    Ok(KwResult {
        h,
        dof,
        p_value: chi_square_sf(h, dof as f64),
        tie_correction,
    })
}
