use proptest::prelude::*;
use sevi_core::indicators::IndicatorVector;
use sevi_core::scoring::{align_and_normalize, ewm_weights, score, score_with, WeightMatrix, BLOCKS};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i:03}")).collect()
}

fn dataset() -> impl Strategy<Value = Vec<IndicatorVector>> {
    prop::collection::vec(prop::array::uniform9(0.0f64..1.0), 12..40)
        .prop_map(|rows| rows.into_iter().map(IndicatorVector::from_array).collect())
}

#[test]
fn closure_ratio_is_inverted_before_scaling() {
    let v = vec![
        IndicatorVector::from_array([1.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]),
        IndicatorVector::from_array([2.0, 0.8, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]),
    ];
    let m = align_and_normalize(&ids(2), &v).unwrap();
    assert!(m.columns[1].inverted);
    assert_eq!(m.column(1), vec![1.0, 0.0]);
    assert_eq!(m.column(0), vec![0.0, 1.0]);
    assert!(m.columns[2].is_constant());
}

#[test]
fn nonfinite_indicator_is_rejected() {
    let v = vec![
        IndicatorVector::from_array([1.0; 9]),
        IndicatorVector::from_array([f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
    ];
    assert!(align_and_normalize(&ids(2), &v).is_err());
}

proptest! {
    #[test]
    fn scores_are_bounded_and_weights_normalized(v in dataset()) {
        let m = align_and_normalize(&ids(v.len()), &v).unwrap();
        for r in &m.rows {
            prop_assert!(r.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        let s = score(&m).unwrap();
        for b in 0..BLOCKS.len() {
            let w = s.weights.weights.block(b);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
        }
        for x in s.result.sevi.iter().chain(&s.alternatives.sevi_eq) {
            prop_assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn row_order_does_not_change_scores(v in dataset(), rot in 0usize..40) {
        let n = v.len();
        let k = rot % n;
        let mut rotated = v.clone();
        rotated.rotate_left(k);
        let a = score(&align_and_normalize(&ids(n), &v).unwrap()).unwrap();
        let b = score(&align_and_normalize(&ids(n), &rotated).unwrap()).unwrap();
        for i in 0..n {
            prop_assert!((a.result.sevi[(i + k) % n] - b.result.sevi[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dominating_row_scores_at_least_as_high(v in dataset(), i in 0usize..40, j in 0usize..40) {
        let n = v.len();
        let (i, j) = (i % n, j % n);
        let mut v = v;
        // make row i weakly better than row j on every aligned column
        let mut better = v[j].to_array();
        for (k, x) in better.iter_mut().enumerate() {
            *x = if k == 1 { (*x - 0.1).max(0.0) } else { (*x + 0.1).min(1.0) };
        }
        v[i] = IndicatorVector::from_array(better);
        let m = align_and_normalize(&ids(n), &v).unwrap();
        let w = ewm_weights(&m).unwrap().weights;
        let s = score_with(&m, &w).unwrap();
        prop_assert!(s.sevi[i] >= s.sevi[j] - 1e-12);
        let eq = score_with(&m, &WeightMatrix::uniform()).unwrap();
        prop_assert!(eq.sevi[i] >= eq.sevi[j] - 1e-12);
    }
}
