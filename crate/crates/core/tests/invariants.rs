//! Property tests for invariants that must hold for any input.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selcascade::geometry::{
    crop_patch_into, nme, patch_origin, procrustes_align, shape_update, NormPair, Plane, Point,
    Shape, SimilarityTransform,
};
use selcascade::model::{
    init_params, local_patch_attention, stage_forward, stage_mma, ModelConfig, StageInput,
};
use selcascade::numerics::{DenseLayer, MmaLedger};
use selcascade::policy::{
    assign_iterations, random_baseline, ErrorSource, SampleRecord,
};
use selcascade::synthdata::{generate_shape, GeneratorConfig};
use selcascade::training::{gdb_weights, GdbParams};

fn shape_strategy(n: usize) -> impl Strategy<Value = Shape> {
    prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), n)
        .prop_map(|v| Shape::new(v.into_iter().map(|(x, y)| Point::new(x, y)).collect(), 0).unwrap())
}

fn level0_face() -> Shape {
    generate_shape(&GeneratorConfig::default(), 0).unwrap().0.to_frame(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn procrustes_undoes_any_similarity(
        shape in shape_strategy(7),
        scale in 0.2..5.0f64,
        angle in -3.0..3.0f64,
        tx in -50.0..50.0f64,
        ty in -50.0..50.0f64,
    ) {
        prop_assume!(shape.centroid_size() > 1.0);
        let t = SimilarityTransform::new(scale, angle, Point::new(tx, ty));
        let fit = procrustes_align(&t.apply_shape(&shape), &shape).unwrap();
        prop_assert!(fit.residual < 1e-8 * shape.centroid_size().max(1.0));
    }

    #[test]
    fn nme_does_not_depend_on_frame(
        pred in shape_strategy(12),
        gt in shape_strategy(12),
        frame in 1usize..4,
    ) {
        let norm = NormPair::new(vec![0, 1, 2], vec![6, 7, 8]);
        prop_assume!(norm.distance(&gt).map(|d| d > 1.0).unwrap_or(false));
        let a = nme(&pred, &gt, &norm).unwrap();
        let b = nme(&pred.to_frame(frame), &gt.to_frame(frame), &norm).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn upscaled_update_with_zero_delta_doubles(shape in shape_strategy(5)) {
        let zero = vec![Point::new(0.0, 0.0); 5];
        let up = shape_update(&shape, &zero, true).unwrap();
        prop_assert_eq!(up.frame, 1);
        prop_assert_eq!(up.points, shape.scaled(2.0).points);
        let same = shape_update(&shape, &zero, false).unwrap();
        prop_assert_eq!(same, shape);
    }

    #[test]
    fn crop_reads_the_window_or_zero(
        cx in -10.0..40.0f64,
        cy in -10.0..40.0f64,
        size in 2usize..16,
    ) {
        let plane = Plane {
            width: 30,
            height: 25,
            data: (0..750).map(|i| (i % 97) as f64 + 1.0).collect(),
        };
        let mut out = vec![f64::NAN; size * size];
        crop_patch_into(&plane, Point::new(cx, cy), size, &mut out);
        let (x0, y0) = patch_origin(Point::new(cx, cy), size);
        for r in 0..size {
            for c in 0..size {
                let (x, y) = (x0 + c as i64, y0 + r as i64);
                let want = if x < 0 || y < 0 || x >= 30 || y >= 25 {
                    0.0
                } else {
                    plane.get(x as usize, y as usize)
                };
                prop_assert_eq!(out[r * size + c], want);
            }
        }
        // shifting the center by whole pixels shifts the window
        let (x1, y1) = patch_origin(Point::new(cx + 3.0, cy - 2.0), size);
        prop_assert_eq!((x1 - x0, y1 - y0), (3, -2));
    }

    #[test]
    fn attention_weights_lie_strictly_inside_unit_interval(
        seed in any::<u64>(),
        features in prop::collection::vec(0.0..4.0f64, 16),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = DenseLayer::fan_in_uniform(16, 16, 1.0, &mut rng);
        let (weighted, weights) =
            local_patch_attention(&features, &layer, &mut MmaLedger::new()).unwrap();
        for ((w, a), f) in weights.iter().zip(&weighted).zip(&features) {
            prop_assert!(*w > 0.0 && *w < 1.0);
            prop_assert!((a - w * f).abs() < 1e-15);
        }
    }

    #[test]
    fn higher_threshold_never_delays_exit(
        rows in prop::collection::vec(prop::collection::vec(0.0..20.0f64, 3), 1..20),
        t1 in 0.0..25.0f64,
        dt in 0.0..10.0f64,
    ) {
        let records: Vec<SampleRecord> = rows
            .iter()
            .map(|r| SampleRecord::new(r.clone(), r.iter().map(|v| v * 0.5).collect()).unwrap())
            .collect();
        for source in [ErrorSource::True, ErrorSource::Predicted] {
            let low = assign_iterations(&records, t1, source).unwrap();
            let high = assign_iterations(&records, t1 + dt, source).unwrap();
            prop_assert!(low.exits.iter().zip(&high.exits).all(|(a, b)| b <= a));
            prop_assert_eq!(low.counts.iter().sum::<usize>(), records.len());
        }
    }

    #[test]
    fn random_baseline_spends_the_same_compute(
        rows in prop::collection::vec(prop::collection::vec(0.0..20.0f64, 3), 1..15),
        t in 0.0..20.0f64,
        seed in any::<u64>(),
    ) {
        let records: Vec<SampleRecord> = rows
            .iter()
            .map(|r| SampleRecord::new(r.clone(), r.clone()).unwrap())
            .collect();
        let a = assign_iterations(&records, t, ErrorSource::Predicted).unwrap();
        let mean = a.exits.iter().sum::<usize>() as f64 / records.len() as f64;
        let base = random_baseline(&records, &a.counts, 5, seed).unwrap();
        prop_assert!((base.mean_iterations - mean).abs() < 1e-12);
        let lo = rows.iter().map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min)).sum::<f64>();
        let hi = rows.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)).sum::<f64>();
        let n = records.len() as f64;
        prop_assert!(base.mean_nme >= lo / n - 1e-9 && base.mean_nme <= hi / n + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gdb_duplication_is_monotone_in_distance(seed in any::<u64>()) {
        let cfg = GeneratorConfig { seed, count: 30, extreme_fraction: 0.2, ..GeneratorConfig::default() };
        let shapes: Vec<Shape> = (0..30).map(|i| generate_shape(&cfg, i).unwrap().0).collect();
        let report = gdb_weights(&shapes, GdbParams::default()).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                if report.values[i] < report.values[j] {
                    prop_assert!(report.counts[i] <= report.counts[j]);
                }
            }
        }
    }

    #[test]
    fn stage_ledger_matches_closed_form(
        subset in prop::sample::subsequence((0..68usize).collect::<Vec<_>>(), 1..10),
        hidden in 1usize..40,
        batch in 1usize..4,
    ) {
        let mut config = ModelConfig::face68(subset);
        config.hidden = hidden;
        let model = init_params(3, config.clone(), level0_face()).unwrap();
        let level = Plane::filled(64, 64, 0.3);
        let inputs: Vec<StageInput<'_>> = (0..batch)
            .map(|_| StageInput { level: &level, shape: &model.mean_face })
            .collect();
        let mut ledger = MmaLedger::new();
        stage_forward(&model.stages[0], &config, &inputs, &vec![0.0; batch * hidden], &mut ledger, false)
            .unwrap();
        prop_assert_eq!(ledger.total(), batch as u64 * stage_mma(&config).total());
    }
}
