//! The nine street-segment indicators, brand-ratio smoothing and closure clamping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{DetectionCounts, SamplingPoint, StreetSegment};

/// Raw indicator values for one street segment, in canonical order
/// `sd, cr, br, mv, md, nd, pp, gr, gd`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IndicatorVector {
    /// Shop density, signboards per meter.
    pub sd: f64,
    /// Closure ratio in [0, 1].
    pub cr: f64,
    /// Weighted brand ratio.
    pub br: f64,
    /// Mall spillover vitality.
    pub mv: f64,
    /// Motor vehicle density.
    pub md: f64,
    /// Non-motor vehicle density.
    pub nd: f64,
    /// Pedestrian presence.
    pub pp: f64,
    /// Green coverage ratio in [0, 1].
    pub gr: f64,
    /// Shopfront glazing density.
    pub gd: f64,
}

impl IndicatorVector {
    pub const NAMES: [&'static str; 9] = ["sd", "cr", "br", "mv", "md", "nd", "pp", "gr", "gd"];

    pub fn to_array(&self) -> [f64; 9] {
        [self.sd, self.cr, self.br, self.mv, self.md, self.nd, self.pp, self.gr, self.gd]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        IndicatorVector {
            sd: v[0],
            cr: v[1],
            br: v[2],
            mv: v[3],
            md: v[4],
            nd: v[5],
            pp: v[6],
            gr: v[7],
            gd: v[8],
        }
    }
}

/// Tier weights applied to decoded brand counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrandWeights {
    pub w_local: f64,
    pub w_global: f64,
    pub w_ordinary: f64,
}

impl Default for BrandWeights {
    fn default() -> Self {
        BrandWeights {
            w_local: 1.0,
            w_global: 1.5,
            w_ordinary: 0.0,
        }
    }
}

impl BrandWeights {
    pub fn validate(&self) -> Result<()> {
        let finite = self.w_local.is_finite() && self.w_global.is_finite() && self.w_ordinary.is_finite();
        if !finite || !(self.w_global >= self.w_local && self.w_local >= self.w_ordinary && self.w_ordinary >= 0.0) {
            return Err(Error::Config(format!(
                "brand weights must satisfy w_global >= w_local >= w_ordinary >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Decoded brand tallies for one sampling point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrandCounts {
    pub n_local: u64,
    pub n_global: u64,
    pub n_ordinary: u64,
}

impl BrandCounts {
    pub fn weighted_score(&self, w: &BrandWeights) -> f64 {
        self.n_local as f64 * w.w_local + self.n_global as f64 * w.w_global + self.n_ordinary as f64 * w.w_ordinary
    }
}

impl std::ops::AddAssign for BrandCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.n_local += rhs.n_local;
        self.n_global += rhs.n_global;
        self.n_ordinary += rhs.n_ordinary;
    }
}

/// Indicators for a segment plus the no-signboard flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentIndicators {
    pub values: IndicatorVector,
    /// True when the segment has no signboards, so `cr` and `br` were set to 0
    /// rather than computed.
    pub no_signboards: bool,
}

pub fn clamp_closures(nc: u64, ns: u64) -> u64 {
    nc.min(ns)
}

/// Weighted brand ratio at a single point; 0 when the point has no signboards.
pub fn point_brand_ratio(detections: &DetectionCounts, brands: &BrandCounts, weights: &BrandWeights) -> f64 {
    let ns = detections.signboards();
    if ns == 0 {
        0.0
    } else {
        brands.weighted_score(weights) / ns as f64
    }
}

/// Centered moving mean whose window shrinks at the series ends.
pub fn smooth_along_route(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!("smoothing window must be an odd integer >= 1, got {window}")));
    }
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}

/// Computes the indicator vector of one segment.
///
/// `points` and `brands` are parallel slices holding the segment's sampling
/// points (any order; they are sorted by `order_along_segment` here). Counts
/// are summed over both sides of every point and divided by the segment length
/// once. The brand ratio is smoothed along the point series with `window`
/// before aggregation: the segment value is the signboard-weighted mean of the
/// smoothed point ratios, which for `window == 1` is exactly
/// `sum(weighted brand score) / sum(signboards)`.
pub fn segment_indicators(
    segment: &StreetSegment,
    points: &[&SamplingPoint],
    brands: &[BrandCounts],
    mv: f64,
    weights: &BrandWeights,
    window: usize,
) -> Result<SegmentIndicators> {
    if !(segment.length_m > 0.0) {
        return Err(Error::Config(format!(
            "segment `{}` has nonpositive length {}",
            segment.id, segment.length_m
        )));
    }
    if points.len() != brands.len() {
        return Err(Error::Config(format!(
            "segment `{}`: {} points but {} brand tallies",
            segment.id,
            points.len(),
            brands.len()
        )));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| points[i].order_along_segment);

    let mut total = DetectionCounts::default();
    for p in points {
        total += &p.detections;
    }
    let l = segment.length_m;
    let ns = total.signboards();
    let nc = clamp_closures(total.closed(), ns);

    let point_br: Vec<f64> = order
        .iter()
        .map(|&i| point_brand_ratio(&points[i].detections, &brands[i], weights))
        .collect();
    let smoothed = smooth_along_route(&point_br, window)?;

    let (cr, br) = if ns == 0 {
        (0.0, 0.0)
    } else {
        let weighted: f64 = order
            .iter()
            .zip(&smoothed)
            .map(|(&i, b)| points[i].detections.signboards() as f64 * b)
            .sum();
        (nc as f64 / ns as f64, weighted / ns as f64)
    };
    let gr = match total.total_pixels() {
        0 => 0.0,
        t => total.green_pixels() as f64 / t as f64,
    };

    Ok(SegmentIndicators {
        values: IndicatorVector {
            sd: ns as f64 / l,
            cr,
            br,
            mv,
            md: total.motor() as f64 / l,
            nd: total.nonmotor() as f64 / l,
            pp: total.persons() as f64 / l,
            gr,
            gd: total.glass() as f64 / l,
        },
        no_signboards: ns == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(len: f64) -> StreetSegment {
        StreetSegment {
            id: "s".into(),
            length_m: len,
            point_ids: vec![],
        }
    }

    fn point(order: u32, c: DetectionCounts) -> SamplingPoint {
        SamplingPoint::new(format!("p{order}"), 118.78, 32.06, "s", order, c).unwrap()
    }

    #[test]
    fn density_and_closure_ratio() {
        let c = DetectionCounts {
            signboards_left: 6,
            signboards_right: 4,
            closed_left: 1,
            closed_right: 1,
            ..Default::default()
        };
        let p = point(0, c);
        let out = segment_indicators(&seg(100.0), &[&p], &[BrandCounts::default()], 0.0, &BrandWeights::default(), 5)
            .unwrap();
        assert!((out.values.sd - 0.10).abs() < 1e-15);
        assert!((out.values.cr - 0.20).abs() < 1e-15);
        assert!(!out.no_signboards);
    }

    #[test]
    fn weighted_brand_ratio_by_hand() {
        let c = DetectionCounts {
            signboards_left: 5,
            signboards_right: 5,
            ..Default::default()
        };
        let p = point(0, c);
        let b = BrandCounts {
            n_local: 2,
            n_global: 2,
            n_ordinary: 3,
        };
        let out = segment_indicators(&seg(50.0), &[&p], &[b], 0.0, &BrandWeights::default(), 1).unwrap();
        // (2 * 1.0 + 2 * 1.5) / 10
        assert!((out.values.br - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_zero_detections_give_zero_vector() {
        let p = point(0, DetectionCounts::default());
        let out = segment_indicators(&seg(80.0), &[&p], &[BrandCounts::default()], 0.0, &BrandWeights::default(), 5)
            .unwrap();
        assert_eq!(out.values, IndicatorVector::default());
        assert!(out.no_signboards);
    }

    #[test]
    fn closures_are_clamped() {
        assert_eq!(clamp_closures(3, 10), 3);
        assert_eq!(clamp_closures(12, 10), 10);
        assert_eq!(clamp_closures(0, 0), 0);
        let c = DetectionCounts {
            signboards_left: 2,
            closed_left: 5,
            ..Default::default()
        };
        let p = point(0, c);
        let out = segment_indicators(&seg(10.0), &[&p], &[BrandCounts::default()], 0.0, &BrandWeights::default(), 1)
            .unwrap();
        assert_eq!(out.values.cr, 1.0);
    }

    #[test]
    fn green_ratio_with_zero_pixels() {
        let c = DetectionCounts {
            persons_left: 3,
            ..Default::default()
        };
        let p = point(0, c);
        let out = segment_indicators(&seg(10.0), &[&p], &[BrandCounts::default()], 0.0, &BrandWeights::default(), 1)
            .unwrap();
        assert_eq!(out.values.gr, 0.0);
        assert!((out.values.pp - 0.3).abs() < 1e-15);
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth_along_route(&[2.5; 7], 5).unwrap(), vec![2.5; 7]);
        let s = smooth_along_route(&[0.0, 0.0, 5.0, 0.0, 0.0], 5).unwrap();
        let want = [5.0 / 3.0, 5.0 / 4.0, 1.0, 5.0 / 4.0, 5.0 / 3.0];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let v = vec![1.0, -3.0, 7.5];
        assert_eq!(smooth_along_route(&v, 1).unwrap(), v);
        assert!(smooth_along_route(&v, 4).is_err());
        assert!(smooth_along_route(&v, 0).is_err());
        assert!(smooth_along_route(&[], 5).unwrap().is_empty());
    }

    #[test]
    fn smoothing_follows_order_along_segment() {
        let mk = |order, ns, local| {
            (
                point(
                    order,
                    DetectionCounts {
                        signboards_left: ns,
                        ..Default::default()
                    },
                ),
                BrandCounts {
                    n_local: local,
                    ..Default::default()
                },
            )
        };
        let (a, ba) = mk(0, 4, 4);
        let (b, bb) = mk(1, 4, 0);
        let (c, bc) = mk(2, 2, 0);
        let w = BrandWeights::default();
        let fwd = segment_indicators(&seg(60.0), &[&a, &b, &c], &[ba, bb, bc], 0.0, &w, 3).unwrap();
        let rev = segment_indicators(&seg(60.0), &[&c, &a, &b], &[bc, ba, bb], 0.0, &w, 3).unwrap();
        assert_eq!(fwd, rev);
        // point ratios [1, 0, 0] -> smoothed [1/2, 1/3, 0]; weighted by ns [4, 4, 2] over 10
        let want = (4.0 * 0.5 + 4.0 / 3.0) / 10.0;
        assert!((fwd.values.br - want).abs() < 1e-15);
    }

    #[test]
    fn all_ordinary_brands_score_zero_by_default() {
        let c = DetectionCounts {
            signboards_right: 7,
            ..Default::default()
        };
        let p = point(0, c);
        let b = BrandCounts {
            n_ordinary: 7,
            ..Default::default()
        };
        let out = segment_indicators(&seg(10.0), &[&p], &[b], 0.0, &BrandWeights::default(), 5).unwrap();
        assert_eq!(out.values.br, 0.0);
    }

    #[test]
    fn weights_validation() {
        assert!(BrandWeights::default().validate().is_ok());
        let bad = BrandWeights {
            w_local: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn counts_strategy() -> impl Strategy<Value = DetectionCounts> {
        prop::array::uniform16(0u64..50).prop_map(|mut a| {
            a[14] += a[12];
            a[15] += a[13];
            DetectionCounts::from_array(a)
        })
    }

    proptest! {
        #[test]
        fn densities_are_scale_invariant(c1 in counts_strategy(), c2 in counts_strategy(), len in 1.0f64..500.0) {
            let p1 = point(0, c1);
            let p2 = point(1, c2);
            let double = |c: &DetectionCounts| DetectionCounts::from_array(c.to_array().map(|v| v * 2));
            let q1 = point(0, double(&c1));
            let q2 = point(1, double(&c2));
            let b = [BrandCounts::default(); 2];
            let w = BrandWeights::default();
            let a = segment_indicators(&seg(len), &[&p1, &p2], &b, 0.0, &w, 5).unwrap().values;
            let d = segment_indicators(&seg(2.0 * len), &[&q1, &q2], &b, 0.0, &w, 5).unwrap().values;
            for (x, y) in [(a.sd, d.sd), (a.md, d.md), (a.nd, d.nd), (a.pp, d.pp), (a.gd, d.gd)] {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn ratios_stay_in_unit_interval(c in counts_strategy(), loc in 0u64..20, glb in 0u64..20, ord in 0u64..20) {
            let p = point(0, c);
            let b = BrandCounts { n_local: loc, n_global: glb, n_ordinary: ord };
            let v = segment_indicators(&seg(30.0), &[&p], &[b], 0.0, &BrandWeights::default(), 5).unwrap().values;
            prop_assert!((0.0..=1.0).contains(&v.cr));
            prop_assert!((0.0..=1.0).contains(&v.gr));
            prop_assert!(v.br >= 0.0);
        }

        #[test]
        fn smoothing_stays_within_range(values in prop::collection::vec(-100.0f64..100.0, 1..40), half in 0usize..4) {
            let s = smooth_along_route(&values, 2 * half + 1).unwrap();
            prop_assert_eq!(s.len(), values.len());
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for v in &s {
                prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
            }
            if half == 0 {
                let m1: f64 = values.iter().sum::<f64>() / values.len() as f64;
                let m2: f64 = s.iter().sum::<f64>() / s.len() as f64;
                prop_assert!((m1 - m2).abs() < 1e-12);
            }
        }
    }
}
