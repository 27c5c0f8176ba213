use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linearly interpolated empirical quantile of sorted data
/// (position `(n - 1) * q`, the "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Low,
    Mid,
    High,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Low, Tier::Mid, Tier::High];

    pub fn name(self) -> &'static str {
        match self {
            Tier::Low => "low",
            Tier::Mid => "mid",
            Tier::High => "high",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tertile labels cut at the 1/3 and 2/3 interpolated quantiles; a value equal
/// to a cut goes to the lower tier.
pub fn tertile_split(values: &[f64]) -> Result<Vec<Tier>> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "tertile split needs at least 3 values, got {}",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let c1 = quantile_sorted(&sorted, 1.0 / 3.0);
    let c2 = quantile_sorted(&sorted, 2.0 / 3.0);
    Ok(values
        .iter()
        .map(|&v| {
            if v <= c1 {
                Tier::Low
            } else if v <= c2 {
                Tier::Mid
            } else {
                Tier::High
            }
        })
        .collect())
}
