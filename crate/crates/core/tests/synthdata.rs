use std::path::Path;

use selcascade::geometry::markup::flip_permutation68;
use selcascade::geometry::{mean_shape, procrustes_align, write_pts, Point, Shape};
use selcascade::synthdata::{
    face_template68, generate_dataset, generate_shape, generate_with_poses, load_pts_dataset,
    read_pgm, template_shape, write_dataset, write_pgm, GeneratorConfig,
};
use selcascade::training::{gdb_weights, GdbParams};
use selcascade::Error;

fn still() -> GeneratorConfig {
    GeneratorConfig {
        rotation_deg: 0.0,
        scale_jitter: 0.0,
        shift: 0.0,
        yaw: 0.0,
        expression: 0.0,
        shape_noise: 0.0,
        count: 5,
        ..GeneratorConfig::default()
    }
}

#[test]
fn template_is_mirror_symmetric() {
    let t = face_template68();
    let perm = flip_permutation68();
    for (i, &j) in perm.iter().enumerate() {
        assert!((t[i].x + t[j].x).abs() < 1e-12, "{i} vs {j}");
        assert!((t[i].y - t[j].y).abs() < 1e-12);
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = GeneratorConfig {
        count: 4,
        seed: 3,
        ..GeneratorConfig::default()
    };
    let a = generate_dataset(&cfg).unwrap();
    assert_eq!(a, generate_dataset(&cfg).unwrap());
    let other = generate_dataset(&GeneratorConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a[0].gt, other[0].gt);
}

#[test]
fn zero_amplitudes_reproduce_the_template() {
    let template = template_shape(&still()).unwrap();
    for s in generate_dataset(&still()).unwrap() {
        assert_eq!(s.gt, template);
        assert_eq!(s.gt.frame, 2);
        assert_eq!((s.image.width, s.image.height), (256, 256));
    }
}

#[test]
fn shapes_stay_inside_the_image() {
    let cfg = GeneratorConfig {
        count: 200,
        face_size: 0.8,
        extreme_fraction: 0.3,
        ..GeneratorConfig::default()
    };
    for i in 0..cfg.count {
        let (s, _) = generate_shape(&cfg, i).unwrap();
        assert!(s.points.iter().all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= 255.0 && p.y <= 255.0));
    }
}

#[test]
fn largest_turns_rank_in_top_gdb_decile() {
    let cfg = GeneratorConfig {
        count: 100,
        seed: 12,
        extreme_fraction: 0.05,
        ..GeneratorConfig::default()
    };
    let drawn: Vec<_> = (0..cfg.count).map(|i| generate_shape(&cfg, i).unwrap()).collect();
    let shapes: Vec<Shape> = drawn.iter().map(|(s, _)| s.clone()).collect();
    let report = gdb_weights(&shapes, GdbParams::default()).unwrap();
    let mut by_turn: Vec<usize> = (0..100).collect();
    by_turn.sort_by(|&a, &b| drawn[b].1.yaw.abs().total_cmp(&drawn[a].1.yaw.abs()));
    let mut by_distance: Vec<usize> = (0..100).collect();
    by_distance.sort_by(|&a, &b| report.values[b].total_cmp(&report.values[a]));
    for top in &by_turn[..3] {
        assert!(by_distance[..10].contains(top), "sample {top} not in top decile");
    }
}

#[test]
fn noise_free_mean_shape_is_the_template() {
    let cfg = GeneratorConfig {
        rotation_deg: 25.0,
        scale_jitter: 0.1,
        shift: 0.05,
        count: 20,
        ..still()
    };
    let shapes: Vec<Shape> = (0..cfg.count).map(|i| generate_shape(&cfg, i).unwrap().0).collect();
    let mean = mean_shape(&shapes, 10).unwrap();
    let template = template_shape(&cfg).unwrap();
    let fit = procrustes_align(&template, &mean).unwrap();
    assert!(fit.residual < 1e-6, "residual {}", fit.residual);
}

#[test]
fn dataset_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GeneratorConfig {
        count: 3,
        ..GeneratorConfig::default()
    };
    let samples = generate_dataset(&cfg).unwrap();
    write_dataset(dir.path(), &samples).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert_eq!(manifest.lines().count(), 3);
    let loaded = load_pts_dataset(dir.path(), 256, 2, 68).unwrap();
    assert_eq!(loaded, samples);
    assert!(generate_with_poses(&cfg).unwrap().iter().all(|(_, p)| p.scale > 0.0));
}

#[test]
fn wrong_point_count_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("a.pts");
    let mut text = String::from("version: 1\nn_points: 68\n{\n");
    for i in 0..67 {
        text.push_str(&format!("{i} {i}\n"));
    }
    text.push_str("}\n");
    std::fs::write(&pts, text).unwrap();
    write_pgm(&dir.path().join("a.pgm"), &selcascade::geometry::GrayImage::filled(256, 256, 0)).unwrap();
    let err = load_pts_dataset(dir.path(), 256, 2, 68).unwrap_err();
    match err {
        Error::Parse { file, .. } => assert_eq!(file, pts),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn hand_written_file_and_foreign_image_size() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("face.pts"),
        "version: 1\nn_points: 3\n{\n10.5 20\n30 40.25\n50 60\n}\n",
    )
    .unwrap();
    let image = selcascade::geometry::GrayImage::filled(64, 64, 7);
    write_pgm(&dir.path().join("face.pgm"), &image).unwrap();
    // already the requested size: coordinates are kept verbatim
    let s = &load_pts_dataset(dir.path(), 64, 0, 3).unwrap()[0];
    assert_eq!(
        s.gt.points,
        vec![Point::new(10.5, 20.0), Point::new(30.0, 40.25), Point::new(50.0, 60.0)]
    );
    assert_eq!(s.id, "face");
    // other sizes are cropped around the landmarks and resampled
    let s = &load_pts_dataset(dir.path(), 32, 0, 3).unwrap()[0];
    assert_eq!(s.image.width, 32);
    assert!(s.gt.points.iter().all(|p| p.x > 0.0 && p.x < 31.0 && p.y > 0.0 && p.y < 31.0));
    let d0 = s.gt.points[0].dist(s.gt.points[2]);
    let ratio = d0 / Point::new(10.5, 20.0).dist(Point::new(50.0, 60.0));
    let d1 = s.gt.points[0].dist(s.gt.points[1]);
    assert!((d1 / Point::new(10.5, 20.0).dist(Point::new(30.0, 40.25)) - ratio).abs() < 1e-9);
}

#[test]
fn pts_and_pgm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let shape = Shape::new(vec![Point::new(0.1, 2.0 / 3.0), Point::new(1e-7, 123.456)], 0).unwrap();
    let p = dir.path().join("x.pts");
    write_pts(&p, &shape).unwrap();
    assert_eq!(selcascade::geometry::read_pts(&p).unwrap(), shape.points);
    let s = &generate_dataset(&GeneratorConfig { count: 1, ..GeneratorConfig::default() }).unwrap()[0];
    let q = dir.path().join("x.pgm");
    write_pgm(&q, &s.image).unwrap();
    assert_eq!(read_pgm(&q).unwrap(), s.image);
    assert!(read_pgm(Path::new("/nonexistent/file.pgm")).is_err());
}
