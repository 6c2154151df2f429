use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selcascade::geometry::markup::flip_permutation68;
use selcascade::geometry::{GrayImage, Point, Shape, SimilarityTransform};
use selcascade::model::ModelConfig;
use selcascade::synthdata::{generate_dataset, generate_shape, GeneratorConfig};
use selcascade::training::{
    augment, batch_gradient, evaluate, gdb_weights, initial_model, mahalanobis_distances,
    pdb_weights, train_model, write_history_csv, AugmentParams, Augmentation, ComponentPolicy,
    GdbParams, PdbParams, Sample, ShapePca, TrainConfig,
};
use selcascade::Error;

fn gradient_image(side: usize) -> GrayImage {
    let data = (0..side * side)
        .map(|i| ((i % side) * 3 + (i / side) * 5) as u8)
        .collect();
    GrayImage::new(side, side, data).unwrap()
}

fn small_sample() -> Sample {
    let (gt, _) = generate_shape(&GeneratorConfig::default(), 0).unwrap();
    Sample {
        id: "s".into(),
        image: gradient_image(256),
        gt,
    }
}

#[test]
fn disabled_augmentation_is_identity() {
    let s = small_sample();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..5 {
        assert_eq!(augment(&s, &mut rng, &AugmentParams::disabled()), s);
    }
}

#[test]
fn flip_mirrors_and_swaps_pairs() {
    let s = small_sample();
    let flip = Augmentation {
        flip: true,
        ..Augmentation::default()
    };
    let f = flip.apply(&s);
    let perm = flip_permutation68();
    for i in 0..68 {
        let src = s.gt.points[perm[i]];
        assert_eq!(f.gt.points[i], Point::new(255.0 - src.x, src.y));
    }
    for y in [0, 17, 255] {
        for x in [0, 9, 200] {
            assert_eq!(f.image.get(x, y), s.image.get(255 - x, y));
        }
    }
    let back = flip.apply(&f);
    assert_eq!(back.image, s.image);
    for (p, q) in back.gt.points.iter().zip(&s.gt.points) {
        assert!(p.dist(*q) < 1e-12);
    }
}

#[test]
fn rotation_round_trip_restores_landmarks() {
    let s = small_sample();
    for deg in [5.0f64, 17.0, -29.0] {
        let fwd = Augmentation {
            rotation: deg.to_radians(),
            ..Augmentation::default()
        };
        let back = Augmentation {
            rotation: -deg.to_radians(),
            ..Augmentation::default()
        };
        let round = back.apply(&fwd.apply(&s));
        for (p, q) in round.gt.points.iter().zip(&s.gt.points) {
            assert!(p.dist(*q) < 0.5);
        }
    }
}

#[test]
fn augmented_landmarks_follow_the_geometric_map() {
    let s = small_sample();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = AugmentParams {
        flip_prob: 0.0,
        intensity_prob: 0.0,
        ..AugmentParams::default()
    };
    for _ in 0..20 {
        let a = Augmentation::sample(&mut rng, &params, 100.0);
        let out = a.apply(&s);
        for (p, q) in out.gt.points.iter().zip(&s.gt.points) {
            assert!(p.dist(a.map_point(*q, 256, 256)) < 1e-9);
        }
    }
}

#[test]
fn identical_shapes_need_no_duplication() {
    let (shape, _) = generate_shape(&GeneratorConfig::default(), 3).unwrap();
    let shapes = vec![shape; 12];
    let report = gdb_weights(&shapes, GdbParams::default()).unwrap();
    assert!(report.values.iter().all(|&d| d == 0.0));
    assert!(report.counts.iter().all(|&c| c == 1));
    assert_eq!(report.components, 0);
    let pdb = pdb_weights(&shapes, PdbParams::default()).unwrap();
    assert!(pdb.counts.iter().all(|&c| c == 1));
}

/// Direct `y^T C^{-1} y` on the raw K-dimensional scores.
fn brute_force_mahalanobis(pca: &ShapePca, k: usize) -> Vec<f64> {
    let n = pca.aligned.nrows();
    let dim = pca.mean.len();
    let mut centered = pca.aligned.clone();
    for c in 0..dim {
        for r in 0..n {
            centered[(r, c)] -= pca.mean[c];
        }
    }
    let basis = pca.axes.columns(0, k).into_owned();
    let scores: DMatrix<f64> = &centered * basis;
    let cov = scores.transpose() * &scores / (n as f64 - 1.0);
    let inv = cov.try_inverse().expect("full-rank score covariance");
    (0..n)
        .map(|r| {
            let y: DVector<f64> = scores.row(r).transpose();
            (y.transpose() * &inv * &y)[(0, 0)].sqrt()
        })
        .collect()
}

#[test]
fn mahalanobis_matches_covariance_inverse_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let shapes: Vec<Shape> = (0..40)
            .map(|_| {
                let pts = (0..5)
                    .map(|_| Point::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
                    .collect();
                Shape::new(pts, 0).unwrap()
            })
            .collect();
        let pca = ShapePca::fit(&shapes).unwrap();
        let k = pca.choose_components(ComponentPolicy::default());
        assert!(k >= 1);
        let fast = mahalanobis_distances(&pca, k);
        let slow = brute_force_mahalanobis(&pca, k);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

fn planted_set() -> Vec<Shape> {
    let calm = GeneratorConfig {
        yaw: 0.1,
        rotation_deg: 5.0,
        ..GeneratorConfig::default()
    };
    let turned = GeneratorConfig {
        yaw: 0.8,
        extreme_yaw: 0.9,
        extreme_fraction: 1.0,
        seed: 99,
        ..calm.clone()
    };
    let mut shapes: Vec<Shape> = (0..95).map(|i| generate_shape(&calm, i).unwrap().0).collect();
    shapes.extend((0..5).map(|i| generate_shape(&turned, i).unwrap().0));
    shapes
}

#[test]
fn planted_extremes_rank_in_top_decile() {
    let report = gdb_weights(&planted_set(), GdbParams::default()).unwrap();
    let mut order: Vec<usize> = (0..100).collect();
    order.sort_by(|&a, &b| report.values[b].total_cmp(&report.values[a]));
    for planted in 95..100 {
        assert!(order[..10].contains(&planted), "sample {planted} not in top decile");
    }
}

#[test]
fn gdb_counts_are_monotone_and_similarity_invariant() {
    let shapes = planted_set();
    let report = gdb_weights(&shapes, GdbParams::default()).unwrap();
    let mut pairs: Vec<(f64, usize)> = report.values.iter().copied().zip(report.counts.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    assert!(report.counts.iter().all(|&c| (1..=8).contains(&c)));

    let t = SimilarityTransform::new(1.7, 0.4, Point::new(-30.0, 12.0));
    let moved: Vec<Shape> = shapes.iter().map(|s| t.apply_shape(s)).collect();
    let again = gdb_weights(&moved, GdbParams::default()).unwrap();
    for (a, b) in report.values.iter().zip(&again.values) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn fixed_component_count_beyond_rank_is_reduced() {
    let shapes: Vec<Shape> = (0..6)
        .map(|i| generate_shape(&GeneratorConfig::default(), i).unwrap().0)
        .collect();
    let params = GdbParams {
        components: ComponentPolicy::Fixed(40),
        ..GdbParams::default()
    };
    let report = gdb_weights(&shapes, params).unwrap();
    assert!(report.components <= 5);
}

fn tiny_set(count: usize, seed: u64) -> Vec<Sample> {
    generate_dataset(&GeneratorConfig {
        count,
        seed,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let data = tiny_set(6, 1);
    let config = ModelConfig::face68_19();
    let model = initial_model(&data, &config, 4).unwrap();
    let train = TrainConfig {
        epochs: 1,
        batch_size: 4,
        learning_rate: 0.0,
        ..TrainConfig::default()
    };
    let (trained, history) = train_model(model.clone(), &data, &data[..2], &train).unwrap();
    assert_eq!(trained, model);
    assert_eq!(history.len(), 1);
}

#[test]
fn single_sample_overfits() {
    let data = tiny_set(1, 5);
    let config = ModelConfig::face68_19();
    let model = initial_model(&data, &config, 0).unwrap();
    let train = TrainConfig {
        epochs: 200,
        batch_size: 1,
        augment: AugmentParams::disabled(),
        decay_points: vec![],
        ..TrainConfig::default()
    };
    let (_, history) = train_model(model, &data, &[], &train).unwrap();
    let first = history[0].loss;
    let last = history.last().unwrap().loss;
    assert!(last * 10.0 <= first, "loss went from {first} to {last}");
}

#[test]
fn divergence_is_reported() {
    let data = tiny_set(2, 2);
    let config = ModelConfig::face68_19();
    let mut model = initial_model(&data, &config, 0).unwrap();
    model.stages[1].landmark.bias[0] = f64::NAN;
    let train = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let err = train_model(model.clone(), &data, &[], &train).unwrap_err();
    assert!(matches!(err, Error::Numeric(_)), "{err}");
    let mut grads = model.zeros_like();
    assert!(batch_gradient(&model, &data, &train, &mut grads).is_err());
}

#[test]
fn evaluation_and_history_layout() {
    let data = tiny_set(3, 8);
    let config = ModelConfig::face68_19();
    let model = initial_model(&data, &config, 1).unwrap();
    let eval = evaluate(&model, &data).unwrap();
    assert_eq!(eval.len(), 3);
    assert!(eval.nme.iter().all(|r| r.len() == 3));
    assert!(eval.mean_initial_nme() > 0.0);

    let train = TrainConfig {
        epochs: 2,
        batch_size: 2,
        ..TrainConfig::default()
    };
    let (_, history) = train_model(model, &data, &data, &train).unwrap();
    let mut csv = Vec::new();
    write_history_csv(&history, 3, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epoch,loss,train_nme_1,train_nme_2,train_nme_3,val_nme_1,val_nme_2,val_nme_3,val_error_mae,val_spearman"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn learning_rate_schedule_steps_down() {
    let t = TrainConfig {
        epochs: 20,
        learning_rate: 1.0,
        ..TrainConfig::default()
    };
    assert_eq!(t.learning_rate_at(0), 1.0);
    assert_eq!(t.learning_rate_at(11), 1.0);
    assert!((t.learning_rate_at(12) - 0.3).abs() < 1e-15);
    assert!((t.learning_rate_at(17) - 0.09).abs() < 1e-15);
}
