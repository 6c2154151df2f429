use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use selcascade::geometry::{write_pts, GrayImage, ImagePyramid, Shape};
use selcascade::model::{
    attention_report, cascade_mma, load_model, run_cascade, save_model, stage_mma, ModelParams,
    Thresholds,
};
use selcascade::policy::{sweep, sweep_rows, threshold_grid, write_curves_csv, write_sweep_table, SampleRecord};
use selcascade::synthdata::{generate_dataset, load_pts_dataset, read_pgm, write_dataset};
use selcascade::training::{self, evaluate, gdb_weights, pdb_weights, write_history_csv, BalanceMethod, Sample};
use serde::Serialize;

use crate::config::RunConfig;
use crate::EXIT_INVALID;

/// Missing or unusable input data (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct DataError(String);

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| DataError(format!("`{key}` is not set")).into())
}

fn load_samples(dir: &Path, model: &selcascade::model::ModelConfig) -> Result<Vec<Sample>> {
    ensure!(dir.is_dir(), DataError(format!("dataset {} does not exist", dir.display())));
    let samples = load_pts_dataset(dir, model.image_resolution(), model.iterations - 1, model.landmarks)?;
    ensure!(!samples.is_empty(), DataError(format!("dataset {} is empty", dir.display())));
    Ok(samples)
}

fn load_trained(config: &RunConfig) -> Result<ModelParams> {
    let path = required(&config.model, "model")?;
    ensure!(path.is_file(), DataError(format!("model {} does not exist", path.display())));
    Ok(load_model(path)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn gen_data(config: &RunConfig) -> Result<u8> {
    let gen = config.generator_config()?;
    let samples = generate_dataset(&gen)?;
    write_dataset(&config.out, &samples)?;
    config.write_snapshot(&config.out)?;
    eprintln!("wrote {} samples to {}", samples.len(), config.out.display());
    Ok(0)
}

pub fn train(config: &RunConfig) -> Result<u8> {
    let model_config = config.model_config()?;
    let train_config = config.train_config()?;
    let train_set = load_samples(required(&config.data, "data")?, &model_config)?;
    let val_set = match &config.val_data {
        Some(dir) => load_samples(dir, &model_config)?,
        None => Vec::new(),
    };
    let (model, history) = training::train(&train_set, &val_set, &model_config, &train_config)?;
    config.write_snapshot(&config.out)?;
    save_model(&model, &config.out.join("model.bin"))?;
    let mut out = create(&config.out.join("history.csv"))?;
    write_history_csv(&history, model_config.iterations, &mut out)?;
    out.flush()?;
    if let Some(last) = history.last() {
        eprintln!("final validation NME per iteration: {:?}", last.val_nme);
    }
    Ok(0)
}

#[derive(Serialize)]
struct IterationReport {
    iteration: usize,
    predicted_error: f64,
    mma: u64,
    /// Landmarks in input-image pixels.
    points: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct InferReport {
    image: PathBuf,
    exit_iteration: usize,
    valid: bool,
    total_mma: u64,
    success_threshold: f64,
    failure_threshold: f64,
    iterations: Vec<IterationReport>,
}

/// Bilinear resampling of the whole image to `side × side`; returns the
/// factors mapping resampled coordinates back to the input.
fn fit_to_side(image: &GrayImage, side: usize) -> (GrayImage, f64, f64) {
    if image.width == side && image.height == side {
        return (image.clone(), 1.0, 1.0);
    }
    let kx = (image.width - 1) as f64 / (side - 1) as f64;
    let ky = (image.height - 1) as f64 / (side - 1) as f64;
    let mut data = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let v = image.sample_bilinear(x as f64 * kx, y as f64 * ky);
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    (GrayImage::new(side, side, data).expect("sized buffer"), kx, ky)
}

pub fn infer(config: &RunConfig) -> Result<u8> {
    let mut model = load_trained(config)?;
    model.config.success_threshold = config.success_threshold;
    model.config.failure_threshold = config.failure_threshold;
    let image_path = required(&config.image, "image")?;
    let image = read_pgm(image_path)?;
    let levels = model.config.iterations;
    let (fitted, kx, ky) = fit_to_side(&image, model.config.image_resolution());
    let pyramid = ImagePyramid::build(&fitted, levels)?;
    let trace = run_cascade(&model, &pyramid, &model.mean_face, Thresholds::from_config(&model.config))?;

    let to_input = |shape: &Shape| -> Vec<[f64; 2]> {
        let up = (1usize << (levels - 1 - shape.frame)) as f64;
        shape.points.iter().map(|p| [p.x * up * kx, p.y * up * ky]).collect()
    };
    let report = InferReport {
        image: image_path.to_path_buf(),
        exit_iteration: trace.exit_iteration,
        valid: trace.valid,
        total_mma: trace.total_mma,
        success_threshold: config.success_threshold,
        failure_threshold: config.failure_threshold,
        iterations: trace
            .records
            .iter()
            .map(|r| IterationReport {
                iteration: r.index,
                predicted_error: r.predicted_error,
                mma: r.mma_spent,
                points: to_input(&r.predicted_shape),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    config.write_snapshot(&config.out)?;
    std::fs::write(config.out.join("trace.json"), &text)?;
    if let Some(pts) = &config.pts_out {
        let points = to_input(trace.final_shape())
            .into_iter()
            .map(|[x, y]| selcascade::geometry::Point::new(x, y))
            .collect();
        write_pts(pts, &Shape::new(points, levels - 1)?)?;
    }
    Ok(if trace.valid { 0 } else { EXIT_INVALID })
}

pub fn sweep_policy(config: &RunConfig) -> Result<u8> {
    let model = load_trained(config)?;
    let samples = load_samples(required(&config.data, "data")?, &model.config)?;
    let eval = evaluate(&model, &samples)?;
    let records = eval
        .nme
        .iter()
        .zip(&eval.predicted)
        .map(|(t, p)| SampleRecord::new(t.clone(), p.clone()))
        .collect::<selcascade::Result<Vec<_>>>()?;
    let grid = threshold_grid(&records);
    let rows = sweep_rows(&records, &grid, config.reps, config.seed)?;
    let curves = sweep(&records, &grid, config.reps, config.seed)?;
    config.write_snapshot(&config.out)?;
    let mut out = create(&config.out.join("curves.csv"))?;
    write_curves_csv(&curves, &mut out)?;
    out.flush()?;
    let mut out = create(&config.out.join("sweep.csv"))?;
    write_sweep_table(&rows, stage_mma(&model.config).total(), &mut out)?;
    out.flush()?;
    eprintln!("{} thresholds over {} samples", grid.len(), records.len());
    Ok(0)
}

pub fn balance_report(config: &RunConfig) -> Result<u8> {
    let method = config
        .balance_method()?
        .context("balance-report needs balance = \"gdb\" or \"pdb\"")?;
    let model_config = config.model_config()?;
    let samples = load_samples(required(&config.data, "data")?, &model_config)?;
    let shapes: Vec<Shape> = samples.iter().map(|s| s.gt.clone()).collect();
    let report = match method {
        BalanceMethod::Gdb => gdb_weights(&shapes, config.gdb_params())?,
        BalanceMethod::Pdb => pdb_weights(&shapes, config.pdb_params())?,
    };
    config.write_snapshot(&config.out)?;
    let mut out = create(&config.out.join("balance.csv"))?;
    writeln!(out, "id,method,value,count")?;
    for ((s, v), c) in samples.iter().zip(&report.values).zip(&report.counts) {
        writeln!(out, "{},{},{v},{c}", s.id, method.tag())?;
    }
    out.flush()?;
    eprintln!("{} principal components", report.components);
    Ok(0)
}

pub fn attention(config: &RunConfig) -> Result<u8> {
    let model = load_trained(config)?;
    let samples = load_samples(required(&config.data, "data")?, &model.config)?;
    let pyramids = samples
        .iter()
        .map(|s| s.pyramid(&model.config))
        .collect::<selcascade::Result<Vec<_>>>()?;
    let refs: Vec<&ImagePyramid> = pyramids.iter().collect();
    let rows = attention_report(&model, &refs)?;
    config.write_snapshot(&config.out)?;
    let mut out = create(&config.out.join("attention.csv"))?;
    writeln!(out, "patch,landmark,x,y,mean_attention")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.patch, r.landmark, r.position.x, r.position.y, r.mean_attention)?;
    }
    out.flush()?;
    Ok(0)
}

pub fn count_mma(config: &RunConfig) -> Result<u8> {
    let model_config = config.model_config()?;
    let stage = stage_mma(&model_config);
    let mut text = String::from("component,per_stage_mma\n");
    for (name, count) in stage.components() {
        text.push_str(&format!("{name},{count}\n"));
    }
    text.push_str(&format!("stage_total,{}\n", stage.total()));
    text.push_str(&format!(
        "cascade_total_{}_iterations,{}\n",
        model_config.iterations,
        cascade_mma(&model_config, model_config.iterations)
    ));
    print!("{text}");
    config.write_snapshot(&config.out)?;
    std::fs::write(config.out.join("mma.csv"), text)?;
    Ok(0)
}
