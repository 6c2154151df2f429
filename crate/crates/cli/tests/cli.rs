use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use selcascade::model::{save_model, ModelConfig, ModelParams};
use selcascade::synthdata::load_pts_dataset;
use selcascade::training::initial_model;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selcascade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, count: usize, seed: u64) {
    let out = run(&[
        "gen-data",
        "--out",
        path(dir),
        "--seed",
        &seed.to_string(),
        "--set",
        &format!("gen_count={count}"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

const SMALL: [&str; 4] = ["--set", "patches=19", "--set", "hidden=16"];

#[test]
fn gen_data_writes_pairs_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    gen(&a, 10, 7);
    gen(&b, 10, 7);
    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert_eq!(manifest.lines().count(), 10);
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.iter().filter(|n| n.ends_with(".pgm")).count(), 10);
    assert_eq!(names.iter().filter(|n| n.ends_with(".pts")).count(), 10);
    assert!(names.contains(&"config.toml".to_string()));
    // the snapshots differ only in the output path
    for n in names.iter().filter(|n| *n != "config.toml") {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
}

#[test]
fn gen_data_with_zero_samples() {
    let tmp = tempfile::tempdir().unwrap();
    gen(tmp.path(), 0, 0);
    assert_eq!(std::fs::read_to_string(tmp.path().join("manifest.txt")).unwrap(), "");
}

#[test]
fn zero_epochs_saves_the_initial_model() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, 6, 1);
    let out_dir = tmp.path().join("run");
    let mut args = vec!["train", "--out", path(&out_dir), "--seed", "5", "--set"];
    let data_arg = format!("data=\"{}\"", path(&data));
    args.extend([data_arg.as_str(), "--set", "epochs=0"]);
    args.extend(SMALL);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let config = ModelConfig {
        hidden: 16,
        ..ModelConfig::face68_19()
    };
    let samples = load_pts_dataset(&data, 256, 2, 68).unwrap();
    let expected = initial_model(&samples, &config, 5).unwrap();
    let reference = tmp.path().join("expected.bin");
    save_model(&expected, &reference).unwrap();
    assert_eq!(
        std::fs::read(out_dir.join("model.bin")).unwrap(),
        std::fs::read(reference).unwrap()
    );
    let history = std::fs::read_to_string(out_dir.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1);
}

#[test]
fn tiny_training_run_is_fast_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, 10, 2);
    let data_arg = format!("data=\"{}\"", path(&data));
    let mut models = Vec::new();
    for name in ["r1", "r2"] {
        let dir = tmp.path().join(name);
        let mut args = vec!["train", "--out", path(&dir), "--set", data_arg.as_str()];
        let val = format!("val_data=\"{}\"", path(&data));
        args.extend(["--set", val.as_str(), "--set", "epochs=2", "--set", "batch_size=4"]);
        let start = Instant::now();
        let out = run(&args);
        assert!(start.elapsed().as_secs() < 60);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        models.push((
            std::fs::read(dir.join("model.bin")).unwrap(),
            std::fs::read(dir.join("history.csv")).unwrap(),
        ));
    }
    assert_eq!(models[0], models[1]);
    assert_eq!(String::from_utf8_lossy(&models[0].1).lines().count(), 3);
}

#[test]
fn missing_dataset_and_model_are_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let nowhere = format!("data=\"{}\"", path(&tmp.path().join("nope")));
    assert_eq!(code(&run(&["train", "--out", path(tmp.path()), "--set", &nowhere])), 2);
    let model = format!("model=\"{}\"", path(&tmp.path().join("nope.bin")));
    assert_eq!(code(&run(&["infer", "--out", path(tmp.path()), "--set", &model])), 2);
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["count-mma", "--out", path(tmp.path()), "--set", "epoch=3"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "bogus_key = 1\n").unwrap();
    assert_eq!(code(&run(&["count-mma", "--config", path(&cfg)])), 1);
}

/// Per-stage multiply-adds written out from the layer shapes.
fn hand_stage_mma(m: u64) -> u64 {
    let conv1 = m * 12 * 12 * 16 * 9;
    let conv2 = m * 4 * 4 * 32 * 9 * 16;
    let d = 2 * 2 * 2 * 32;
    let attention = m * d * d;
    let recurrent = (m * d + 256) * 256;
    let heads = 256 * 136 + 256;
    conv1 + conv2 + attention + recurrent + heads
}

fn cascade_total(patches: &str) -> u64 {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["count-mma", "--out", path(tmp.path()), "--set", &format!("patches={patches}")]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, std::fs::read_to_string(tmp.path().join("mma.csv")).unwrap());
    text.lines()
        .find(|l| l.starts_with("cascade_total"))
        .and_then(|l| l.split(',').nth(1))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn count_mma_matches_hand_formula_and_ordering() {
    let (p19, p34, p68) = (cascade_total("19"), cascade_total("34"), cascade_total("68"));
    assert_eq!(p19, 3 * hand_stage_mma(19));
    assert_eq!(p34, 3 * hand_stage_mma(34));
    assert_eq!(p68, 3 * hand_stage_mma(68));
    assert!(p19 < p34 && p34 < p68);
}

fn zero_model_file(dir: &Path, data: &Path) -> std::path::PathBuf {
    let samples = load_pts_dataset(data, 256, 2, 68).unwrap();
    let config = ModelConfig {
        hidden: 16,
        ..ModelConfig::face68_19()
    };
    let init = initial_model(&samples, &config, 0).unwrap();
    let zero = ModelParams::zeros(config, init.mean_face).unwrap();
    let file = dir.join("zero.bin");
    save_model(&zero, &file).unwrap();
    file
}

#[test]
fn infer_with_zero_failure_threshold_is_invalid() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, 2, 3);
    let model = zero_model_file(tmp.path(), &data);
    let pts = tmp.path().join("out.pts");
    let args = [
        "infer".to_string(),
        "--out".into(),
        path(&tmp.path().join("inf")).into(),
        "--set".into(),
        format!("model=\"{}\"", path(&model)),
        "--set".into(),
        format!("image=\"{}\"", path(&data.join("synth_00000.pgm"))),
        "--set".into(),
        format!("pts_out=\"{}\"", path(&pts)),
    ];
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let ok = run(&refs);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("\"exit_iteration\": 1"));
    assert_eq!(selcascade::geometry::read_pts(&pts).unwrap().len(), 68);

    let mut strict = refs.clone();
    strict.extend(["--set", "failure_threshold=0"]);
    let out = run(&strict);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"valid\": false"));
}

#[test]
fn attention_report_of_zero_model() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, 2, 4);
    let model = zero_model_file(tmp.path(), &data);
    let out_dir = tmp.path().join("att");
    let out = run(&[
        "attention-report",
        "--out",
        path(&out_dir),
        "--set",
        &format!("model=\"{}\"", path(&model)),
        "--set",
        &format!("data=\"{}\"", path(&data)),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("attention.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 19);
    assert!(rows.iter().all(|r| r.ends_with(",0.5")));
}

#[test]
fn sweep_policy_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, 6, 5);
    let train_dir = tmp.path().join("run");
    let data_arg = format!("data=\"{}\"", path(&data));
    let mut args = vec!["train", "--out", path(&train_dir), "--set", data_arg.as_str(), "--set", "epochs=1"];
    args.extend(SMALL);
    assert_eq!(code(&run(&args)), 0);
    let model_arg = format!("model=\"{}\"", path(&train_dir.join("model.bin")));
    let sweep_dir = tmp.path().join("sweep");
    let out = run(&["sweep-policy", "--out", path(&sweep_dir), "--set", &model_arg, "--set", &data_arg, "--set", "reps=5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let table = std::fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(header.contains(&"baseline_nme"));
    let mut pairs: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), header.len());
            assert!(!f[4].is_empty());
            (f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pairs.windows(2) {
        if w[1].0 > w[0].0 {
            assert!(w[1].1 > w[0].1);
        }
    }
    assert!(std::fs::read_to_string(sweep_dir.join("curves.csv")).unwrap().starts_with("variant,"));
}

#[test]
fn sweep_over_one_sample_has_at_most_three_points() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, 1, 6);
    let model = zero_model_file(tmp.path(), &data);
    let out_dir = tmp.path().join("sweep");
    let out = run(&[
        "sweep-policy",
        "--out",
        path(&out_dir),
        "--set",
        &format!("model=\"{}\"", path(&model)),
        "--set",
        &format!("data=\"{}\"", path(&data)),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    let mut predicted: Vec<(String, String)> = text
        .lines()
        .filter(|l| l.starts_with("predicted,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].to_string(), f[3].to_string())
        })
        .collect();
    predicted.dedup();
    assert!(!predicted.is_empty() && predicted.len() <= 3);
}

#[test]
fn balance_report_lists_every_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, 12, 8);
    let data_arg = format!("data=\"{}\"", path(&data));
    let out_dir = tmp.path().join("bal");
    let out = run(&["balance-report", "--out", path(&out_dir), "--set", &data_arg, "--set", "balance=gdb"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("balance.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("id,method,value,count\nsynth_00000,gdb,"));
    let none = run(&["balance-report", "--out", path(&out_dir), "--set", &data_arg]);
    assert_eq!(code(&none), 1);
}
