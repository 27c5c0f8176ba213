//! Directional alignment, min-max normalization, entropy weighting, block
//! aggregation into the three dimensions (activity, utilization, physical
//! environment) and TOPSIS closeness scoring.
//!
//! Column layout of a normalized row:
//!
//! | block | columns                         |
//! |-------|---------------------------------|
//! | A     | sd, 1-cr, br, mv                |
//! | U     | md, nd, pp                      |
//! | P     | gr, gd                          |

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::IndicatorVector;
use crate::stats;

pub const BLOCK_A: Range<usize> = 0..4;
pub const BLOCK_U: Range<usize> = 4..7;
pub const BLOCK_P: Range<usize> = 7..9;
pub const BLOCKS: [Range<usize>; 3] = [BLOCK_A, BLOCK_U, BLOCK_P];
pub const DIMENSION_NAMES: [&str; 3] = ["A", "U", "P"];

/// Column names after alignment (closure ratio becomes openness).
pub const ALIGNED_NAMES: [&str; 9] = ["sd", "open", "br", "mv", "md", "nd", "pp", "gr", "gd"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    /// Whether the raw column was flipped (x -> 1 - x) before scaling.
    pub inverted: bool,
    pub min: f64,
    pub max: f64,
}

impl ColumnMeta {
    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix {
    pub segment_ids: Vec<String>,
    pub rows: Vec<[f64; 9]>,
    pub columns: Vec<ColumnMeta>,
}

impl NormalizedMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Flips the closure ratio to `1 - cr` and min-max scales every column to
/// [0, 1]. A constant column maps to 0.5.
pub fn align_and_normalize(segment_ids: &[String], raw: &[IndicatorVector]) -> Result<NormalizedMatrix> {
    if raw.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "normalization needs at least 2 segments, got {}",
            raw.len()
        )));
    }
    if segment_ids.len() != raw.len() {
        return Err(Error::InsufficientData("segment ids and indicator rows differ in length".into()));
    }
    let mut aligned: Vec<[f64; 9]> = Vec::with_capacity(raw.len());
    for (id, v) in segment_ids.iter().zip(raw) {
        let mut a = v.to_array();
        for (j, x) in a.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    segment: id.clone(),
                    column: IndicatorVector::NAMES[j].to_string(),
                });
            }
        }
        a[1] = 1.0 - a[1];
        aligned.push(a);
    }
    let mut columns = Vec::with_capacity(9);
    for j in 0..9 {
        let (min, max) = aligned
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
        columns.push(ColumnMeta {
            name: ALIGNED_NAMES[j].to_string(),
            inverted: j == 1,
            min,
            max,
        });
    }
    let rows = aligned
        .into_iter()
        .map(|a| {
            let mut out = [0.0; 9];
            for j in 0..9 {
                let c = &columns[j];
                out[j] = if c.is_constant() {
                    0.5
                } else {
                    ((a[j] - c.min) / (c.max - c.min)).clamp(0.0, 1.0)
                };
            }
            out
        })
        .collect();
    Ok(NormalizedMatrix {
        segment_ids: segment_ids.to_vec(),
        rows,
        columns,
    })
}

/// Entropy-weight method output for one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyWeights {
    pub entropies: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Entropy weights over the columns of one block.
///
/// `p_ij = r_ij / sum_i r_ij`, `e_j = -(1 / ln n) sum_i p_ij ln p_ij` with
/// `0 ln 0 = 0`, and `w_j = (1 - e_j) / sum_k (1 - e_k)`. An all-zero column
/// carries no information and gets `e_j = 1`. When every divergence is zero
/// the weights are uniform.
pub fn entropy_weights(columns: &[Vec<f64>]) -> Result<EntropyWeights> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::InsufficientData(format!("entropy weights need n >= 2 rows, got {n}")));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InsufficientData("entropy weight columns differ in length".into()));
    }
    let ln_n = (n as f64).ln();
    let entropies: Vec<f64> = columns
        .iter()
        .map(|col| {
            let total: f64 = col.iter().sum();
            // uniform shares have entropy exactly 1; skip the rounding
            if total <= 0.0 || col.iter().all(|&r| r == col[0]) {
                return 1.0;
            }
            let h: f64 = col
                .iter()
                .map(|&r| {
                    let p = r / total;
                    if p > 0.0 {
                        p * p.ln()
                    } else {
                        0.0
                    }
                })
                .sum();
            (-h / ln_n).clamp(0.0, 1.0)
        })
        .collect();
    let divergence: Vec<f64> = entropies.iter().map(|e| 1.0 - e).collect();
    let total: f64 = divergence.iter().sum();
    let weights = if total > 0.0 {
        divergence.iter().map(|d| d / total).collect()
    } else {
        vec![1.0 / columns.len() as f64; columns.len()]
    };
    Ok(EntropyWeights { entropies, weights })
}

/// Block-diagonal weight matrix: one weight row per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub a: [f64; 4],
    pub u: [f64; 3],
    pub p: [f64; 2],
}

impl WeightMatrix {
    pub fn uniform() -> Self {
        WeightMatrix {
            a: [0.25; 4],
            u: [1.0 / 3.0; 3],
            p: [0.5; 2],
        }
    }

    pub fn block(&self, b: usize) -> &[f64] {
        match b {
            0 => &self.a,
            1 => &self.u,
            _ => &self.p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for b in 0..3 {
            let w = self.block(b);
            if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "weights of block {} must be nonnegative and sum to 1, got {w:?}",
                    DIMENSION_NAMES[b]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub weights: WeightMatrix,
    /// Per-block entropy diagnostics in A, U, P order.
    pub blocks: Vec<EntropyWeights>,
}

/// Entropy weights computed independently within each block.
pub fn ewm_weights(matrix: &NormalizedMatrix) -> Result<WeightReport> {
    let blocks: Vec<EntropyWeights> = BLOCKS
        .iter()
        .map(|r| entropy_weights(&r.clone().map(|j| matrix.column(j)).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let weights = WeightMatrix {
        a: blocks[0].weights.clone().try_into().expect("block A has 4 columns"),
        u: blocks[1].weights.clone().try_into().expect("block U has 3 columns"),
        p: blocks[2].weights.clone().try_into().expect("block P has 2 columns"),
    };
    Ok(WeightReport { weights, blocks })
}

/// Dimension scores `(A, U, P)` of one normalized row.
pub fn block_aggregate(row: &[f64; 9], weights: &WeightMatrix) -> [f64; 3] {
    let mut z = [0.0; 3];
    for (b, range) in BLOCKS.iter().enumerate() {
        z[b] = range.clone().zip(weights.block(b)).map(|(j, w)| w * row[j]).sum();
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeviResult {
    pub dims: Vec<[f64; 3]>,
    pub sevi: Vec<f64>,
    pub ideal: [f64; 3],
    pub negative: [f64; 3],
}

/// Relative closeness of each row of `z` to the column-wise maximum, with
/// unweighted Euclidean distances. A row equidistant at zero from both ideals
/// (all dimensions constant) scores 0.5.
pub fn topsis(z: &[[f64; 3]]) -> Result<SeviResult> {
    if z.len() < 2 {
        return Err(Error::InsufficientData(format!("topsis needs at least 2 segments, got {}", z.len())));
    }
    let mut ideal = [f64::NEG_INFINITY; 3];
    let mut negative = [f64::INFINITY; 3];
    for r in z {
        for k in 0..3 {
            ideal[k] = ideal[k].max(r[k]);
            negative[k] = negative[k].min(r[k]);
        }
    }
    let dist = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let sevi = z
        .iter()
        .map(|r| {
            let dp = dist(r, &ideal);
            let dn = dist(r, &negative);
            if dp + dn == 0.0 {
                0.5
            } else {
                dn / (dp + dn)
            }
        })
        .collect();
    Ok(SeviResult {
        dims: z.to_vec(),
        sevi,
        ideal,
        negative,
    })
}

/// Dimension scores of every row under `weights`, then TOPSIS.
pub fn score_with(matrix: &NormalizedMatrix, weights: &WeightMatrix) -> Result<SeviResult> {
    weights.validate()?;
    let z: Vec<[f64; 3]> = matrix.rows.iter().map(|r| block_aggregate(r, weights)).collect();
    topsis(&z)
}

/// TOPSIS over dimensions built with uniform within-block weights.
pub fn sevi_eq(matrix: &NormalizedMatrix) -> Result<Vec<f64>> {
    Ok(score_with(matrix, &WeightMatrix::uniform())?.sevi)
}

/// First principal component score of the normalized matrix, min-max rescaled
/// to [0, 1] and oriented to correlate positively with `reference`.
/// Constant columns are left out of the decomposition.
pub fn sevi_pca(matrix: &NormalizedMatrix, reference: &[f64]) -> Result<Vec<f64>> {
    let keep: Vec<usize> = (0..9).filter(|&j| !matrix.columns[j].is_constant()).collect();
    if keep.len() < 2 {
        return Err(Error::InsufficientData("sevi_pca needs at least two non-constant indicators".into()));
    }
    let labels: Vec<&str> = keep.iter().map(|&j| ALIGNED_NAMES[j]).collect();
    let rows: Vec<Vec<f64>> = matrix.rows.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
    let model = stats::pca(&rows, &labels, 1)?;
    let scores = model.scores(&rows, 0);
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let mut out: Vec<f64> = if hi > lo {
        scores.iter().map(|s| (s - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; scores.len()]
    };
    if let Ok(r) = stats::pearson(&out, reference) {
        if r < 0.0 {
            out.iter_mut().for_each(|v| *v = 1.0 - *v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeIndices {
    pub sevi_eq: Vec<f64>,
    pub sevi_pca: Vec<f64>,
}

pub fn alternative_indices(matrix: &NormalizedMatrix) -> Result<AlternativeIndices> {
    let eq = sevi_eq(matrix)?;
    let pca = sevi_pca(matrix, &eq)?;
    Ok(AlternativeIndices {
        sevi_eq: eq,
        sevi_pca: pca,
    })
}

/// Everything the aggregation stage produces for a set of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeviScores {
    pub weights: WeightReport,
    pub result: SeviResult,
    pub alternatives: AlternativeIndices,
}

/// Entropy-weighted TOPSIS plus both alternative indices.
pub fn score(matrix: &NormalizedMatrix) -> Result<SeviScores> {
    let weights = ewm_weights(matrix)?;
    let result = score_with(matrix, &weights.weights)?;
    let alternatives = alternative_indices(matrix)?;
    Ok(SeviScores {
        weights,
        result,
        alternatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i:03}")).collect()
    }

    #[test]
    fn min_max_and_alignment() {
        let raw: Vec<IndicatorVector> = [0.0, 5.0, 10.0]
            .iter()
            .map(|&v| IndicatorVector {
                sd: v,
                cr: v / 50.0,
                md: 3.0,
                ..Default::default()
            })
            .collect();
        let m = align_and_normalize(&ids(3), &raw).unwrap();
        assert_eq!(m.column(0), vec![0.0, 0.5, 1.0]);
        // cr (0, 0.1, 0.2) -> openness (1, 0.9, 0.8) -> (1, 0.5, 0)
        let open = m.column(1);
        assert!((open[0] - 1.0).abs() < 1e-12 && (open[1] - 0.5).abs() < 1e-12 && open[2].abs() < 1e-12);
        assert_eq!(m.column(4), vec![0.5, 0.5, 0.5]);
        assert!((m.columns[1].min - 0.8).abs() < 1e-15);
        assert!(m.columns[1].inverted);
    }

    #[test]
    fn normalization_rejects_non_finite_and_tiny_inputs() {
        let mut raw = vec![IndicatorVector::default(); 3];
        raw[2].mv = f64::NAN;
        match align_and_normalize(&ids(3), &raw) {
            Err(Error::NonFinite { segment, column }) => {
                assert_eq!(segment, "s002");
                assert_eq!(column, "mv");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(align_and_normalize(&ids(1), &raw[..1]).is_err());
    }

    #[test]
    fn constant_column_gets_zero_weight() {
        let w = entropy_weights(&[vec![0.5; 6], vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]]).unwrap();
        assert!((w.entropies[0] - 1.0).abs() < 1e-15);
        assert_eq!(w.weights[0], 0.0);
        assert_eq!(w.weights[1], 1.0);
    }

    #[test]
    fn mirrored_columns_weigh_equally() {
        let a = vec![0.0, 0.1, 0.5, 0.7, 1.0];
        let b: Vec<f64> = a.iter().rev().copied().collect();
        let w = entropy_weights(&[a, b]).unwrap();
        assert!((w.weights[0] - 0.5).abs() < 1e-15 && (w.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_divergence_is_uniform() {
        let w = entropy_weights(&[vec![0.5; 4], vec![0.0; 4], vec![0.3; 4]]).unwrap();
        assert_eq!(w.weights, vec![1.0 / 3.0; 3]);
        assert!(entropy_weights(&[vec![1.0]]).is_err());
    }

    /// Cell-by-cell evaluation of the entropy-weight formulas.
    fn ewm_oracle(cols: &[Vec<f64>]) -> Vec<f64> {
        let n = cols[0].len() as f64;
        let k = 1.0 / n.ln();
        let mut d = Vec::new();
        for c in cols {
            let s: f64 = c.iter().sum();
            let mut e = 0.0;
            for v in c {
                let p = v / s;
                if p != 0.0 {
                    e -= k * p * p.ln();
                }
            }
            d.push(1.0 - e);
        }
        let total: f64 = d.iter().sum();
        d.iter().map(|x| x / total).collect()
    }

    #[test]
    fn random_block_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..20).map(|_| rng.gen::<f64>().powi(2)).collect()).collect();
        let got = entropy_weights(&cols).unwrap().weights;
        for (a, b) in got.iter().zip(ewm_oracle(&cols)) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_aggregate_cases() {
        let row = [0.5; 9];
        let z = block_aggregate(&row, &WeightMatrix::uniform());
        for v in z {
            assert!((v - 0.5).abs() < 1e-15);
        }
        let single = WeightMatrix {
            a: [0.0, 0.0, 1.0, 0.0],
            u: [0.0, 1.0, 0.0],
            p: [1.0, 0.0],
        };
        let row = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        assert_eq!(block_aggregate(&row, &single), [0.3, 0.6, 0.8]);
    }

    #[test]
    fn block_aggregate_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let row: [f64; 9] = std::array::from_fn(|_| rng.gen());
        let mut w = WeightMatrix::uniform();
        w.a = [0.1, 0.2, 0.3, 0.4];
        w.u = [0.5, 0.25, 0.25];
        w.p = [0.9, 0.1];
        let mut m = nalgebra::DMatrix::<f64>::zeros(3, 9);
        for j in 0..4 {
            m[(0, j)] = w.a[j];
        }
        for j in 0..3 {
            m[(1, 4 + j)] = w.u[j];
        }
        for j in 0..2 {
            m[(2, 7 + j)] = w.p[j];
        }
        let z = m * nalgebra::DVector::from_row_slice(&row);
        let got = block_aggregate(&row, &w);
        for k in 0..3 {
            assert!((got[k] - z[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn topsis_endpoints_and_midpoint() {
        let r = topsis(&[[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]).unwrap();
        assert_eq!(r.sevi[0], 1.0);
        assert_eq!(r.sevi[1], 0.0);
        assert_eq!(r.sevi[2], 0.5);
        let flat = topsis(&[[0.3; 3], [0.3; 3]]).unwrap();
        assert_eq!(flat.sevi, vec![0.5, 0.5]);
        assert!(topsis(&[[0.0; 3]]).is_err());
    }

    #[test]
    fn topsis_three_segment_by_hand() {
        let z = [[0.2, 0.8, 0.5], [0.6, 0.4, 0.1], [1.0, 0.0, 0.9]];
        // ideal (1, 0.8, 0.9), negative (0.2, 0, 0.1)
        let d = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        let (pos, neg) = ([1.0, 0.8, 0.9], [0.2, 0.0, 0.1]);
        let r = topsis(&z).unwrap();
        assert_eq!(r.ideal, pos);
        assert_eq!(r.negative, neg);
        for (i, zi) in z.iter().enumerate() {
            let want = d(*zi, neg) / (d(*zi, pos) + d(*zi, neg));
            assert!((r.sevi[i] - want).abs() < 1e-15);
        }
        // first row: d+ = sqrt(0.64 + 0 + 0.16), d- = sqrt(0 + 0.64 + 0.16): equal
        assert!((r.sevi[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_weights_make_eq_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let raw: Vec<IndicatorVector> = (0..12)
            .map(|_| IndicatorVector::from_array(std::array::from_fn(|_| rng.gen())))
            .collect();
        let m = align_and_normalize(&ids(12), &raw).unwrap();
        assert_eq!(score_with(&m, &WeightMatrix::uniform()).unwrap().sevi, sevi_eq(&m).unwrap());
    }

    #[test]
    fn two_segment_eq_hits_endpoints() {
        let raw = vec![
            IndicatorVector::from_array([1.0, 0.1, 0.5, 2.0, 0.3, 0.2, 0.4, 0.6, 0.1]),
            IndicatorVector::from_array([0.5, 0.4, 0.2, 1.0, 0.1, 0.1, 0.2, 0.2, 0.05]),
        ];
        let m = align_and_normalize(&ids(2), &raw).unwrap();
        let eq = sevi_eq(&m).unwrap();
        assert_eq!(eq, vec![1.0, 0.0]);
    }

    #[test]
    fn rank_one_matrix_gives_monotone_pca_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let factor: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..10.0)).collect();
        let slopes = [1.0, -0.5, 2.0, 0.3, 1.1, 0.7, -1.4, 0.2, 0.9];
        let raw: Vec<IndicatorVector> = factor
            .iter()
            .map(|f| IndicatorVector::from_array(std::array::from_fn(|j| 5.0 + slopes[j] * f)))
            .collect();
        let m = align_and_normalize(&ids(40), &raw).unwrap();
        let alt = alternative_indices(&m).unwrap();
        let rho = stats::spearman(&alt.sevi_pca, &factor).unwrap().abs();
        assert!((rho - 1.0).abs() < 1e-12);
        assert!(stats::pearson(&alt.sevi_pca, &alt.sevi_eq).unwrap() >= 0.0);
    }

    #[test]
    fn weights_validate() {
        assert!(WeightMatrix::uniform().validate().is_ok());
        let mut w = WeightMatrix::uniform();
        w.p = [0.7, 0.7];
        assert!(w.validate().is_err());
    }

    proptest! {
        #[test]
        fn entropy_weights_are_row_permutation_invariant(
            data in prop::collection::vec(prop::array::uniform3(0.0f64..1.0), 2..30),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            let cols: Vec<Vec<f64>> = (0..3).map(|j| data.iter().map(|r| r[j]).collect()).collect();
            let mut perm: Vec<usize> = (0..data.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let pcols: Vec<Vec<f64>> = cols.iter().map(|c| perm.iter().map(|&i| c[i]).collect()).collect();
            let a = entropy_weights(&cols).unwrap().weights;
            let b = entropy_weights(&pcols).unwrap().weights;
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(*x >= 0.0);
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn sevi_stays_in_unit_interval(z in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 2..40)) {
            let r = topsis(&z).unwrap();
            for s in &r.sevi {
                prop_assert!((0.0..=1.0).contains(s));
            }
        }

        #[test]
        fn interior_segment_leaves_existing_scores_unchanged(
            z in prop::collection::vec(prop::array::uniform3(0.0f64..1.0), 2..20),
            t in prop::array::uniform3(0.0f64..1.0),
        ) {
            let before = topsis(&z).unwrap();
            let inside: [f64; 3] = std::array::from_fn(|k| before.negative[k] + t[k] * (before.ideal[k] - before.negative[k]));
            let mut z2 = z.clone();
            z2.push(inside);
            let after = topsis(&z2).unwrap();
            prop_assert_eq!(&after.sevi[..z.len()], &before.sevi[..]);
        }

        #[test]
        fn raising_an_interior_indicator_never_lowers_sevi(
            z in prop::collection::vec(prop::array::uniform3(0.0f64..1.0), 3..20),
            k in 0usize..3, frac in 0.0f64..1.0,
        ) {
            // keep the anchors of the hull fixed by appending explicit extremes
            let mut z = z;
            z.push([0.0; 3]);
            z.push([1.0; 3]);
            let before = topsis(&z).unwrap();
            let mut z2 = z.clone();
            z2[0][k] += frac * (1.0 - z2[0][k]);
            let after = topsis(&z2).unwrap();
            prop_assert!(after.sevi[0] >= before.sevi[0] - 1e-12);
        }
    }
}
