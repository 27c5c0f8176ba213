use proptest::prelude::*;
use sevi_core::geodata::MallAnchor;
use sevi_core::spillover::{
    calibrate_sigma, decay_value, threshold_sweep, Decay, SigmaProvenance, SpilloverConfig, SpilloverField,
};

fn anchors_from(xy: &[(f64, f64)]) -> Vec<MallAnchor> {
    let cats = ["regional", "district", "community"];
    xy.iter()
        .enumerate()
        .map(|(i, (x, y))| MallAnchor::at(format!("A{i:03}"), cats[i % cats.len()], *x, *y))
        .collect()
}

fn decay_strategy() -> impl Strategy<Value = Decay> {
    prop_oneof![Just(Decay::Gaussian), Just(Decay::Exponential), Just(Decay::Linear)]
}

#[test]
fn field_is_zero_beyond_every_threshold() {
    let anchors = anchors_from(&[(0.0, 0.0), (500.0, 0.0), (0.0, 700.0), (400.0, 300.0)]);
    let table = calibrate_sigma(&anchors).unwrap();
    let field = SpilloverField::new(&anchors, &table).unwrap();
    for decay in Decay::ALL {
        let cfg = SpilloverConfig {
            threshold_m: 1000.0,
            decay,
        };
        assert_eq!(field.value_at([5000.0, 5000.0], &cfg), 0.0);
        assert!(field.value_at([100.0, 100.0], &cfg) > 0.0);
    }
}

#[test]
fn single_anchor_categories_are_imputed() {
    let anchors = vec![
        MallAnchor::at("A", "regional", 0.0, 0.0),
        MallAnchor::at("B", "regional", 300.0, 400.0),
        MallAnchor::at("C", "flagship", 9000.0, 0.0),
    ];
    let table = calibrate_sigma(&anchors).unwrap();
    assert_eq!(table.entries["regional"].provenance, SigmaProvenance::Computed);
    assert_eq!(table.entries["regional"].sigma_m, 500.0);
    assert_eq!(table.entries["flagship"].provenance, SigmaProvenance::Imputed);
    assert_eq!(table.entries["flagship"].sigma_m, 500.0);
}

#[test]
fn sweep_agrees_with_single_threshold_evaluation() {
    let anchors = anchors_from(&[(0.0, 0.0), (800.0, 100.0), (1500.0, 1500.0), (2500.0, 0.0), (100.0, 2200.0)]);
    let table = calibrate_sigma(&anchors).unwrap();
    let points: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 * 60.0, (i % 7) as f64 * 300.0]).collect();
    let sweep = threshold_sweep(&points, &anchors, &table, &[1000.0, 2000.0, 3000.0], Decay::Exponential).unwrap();
    let field = SpilloverField::new(&anchors, &table).unwrap();
    for (d, values) in sweep {
        let cfg = SpilloverConfig {
            threshold_m: d,
            decay: Decay::Exponential,
        };
        assert_eq!(values, field.values(&points, &cfg));
    }
}

proptest! {
    #[test]
    fn decay_is_bounded_and_nonincreasing(
        d1 in 0.0f64..5000.0, d2 in 0.0f64..5000.0, sigma in 10.0f64..3000.0,
        threshold in 100.0f64..4000.0, decay in decay_strategy(),
    ) {
        let cfg = SpilloverConfig { threshold_m: threshold, decay };
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let (a, b) = (decay_value(near, sigma, &cfg), decay_value(far, sigma, &cfg));
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(b <= a);
        prop_assert_eq!(decay_value(0.0, sigma, &cfg), 1.0);
        if far > threshold * (1.0 + 1e-9) {
            prop_assert_eq!(b, 0.0);
        }
    }

    #[test]
    fn field_is_monotone_in_threshold_and_translation_invariant(
        xy in prop::collection::vec((0.0f64..5000.0, 0.0f64..5000.0), 2..40),
        q in (0.0f64..5000.0, 0.0f64..5000.0),
        shift in (-1e4f64..1e4, -1e4f64..1e4),
        decay in decay_strategy(),
    ) {
        let anchors = anchors_from(&xy);
        let Ok(table) = calibrate_sigma(&anchors) else { return Ok(()) };
        let field = SpilloverField::new(&anchors, &table).unwrap();
        let moved: Vec<(f64, f64)> = xy.iter().map(|(x, y)| (x + shift.0, y + shift.1)).collect();
        let moved_anchors = anchors_from(&moved);
        let moved_field = SpilloverField::new(&moved_anchors, &calibrate_sigma(&moved_anchors).unwrap()).unwrap();
        let mut last = 0.0;
        for d in [500.0, 1000.0, 2000.0, 3000.0] {
            let cfg = SpilloverConfig { threshold_m: d, decay };
            let v = field.value_at([q.0, q.1], &cfg);
            prop_assert!(v >= last);
            prop_assert!(v <= anchors.len() as f64);
            let w = moved_field.value_at([q.0 + shift.0, q.1 + shift.1], &cfg);
            prop_assert!((v - w).abs() <= 1e-6 * v.max(1.0));
            last = v;
        }
    }
}
