//! On-disk datasets: one `<id>.pgm` + `<id>.pts` pair per sample and a
//! `manifest.txt` listing `image pts` file names, one sample per line.

use std::path::{Path, PathBuf};

use super::pgm::{read_pgm, write_pgm};
use crate::error::{Error, Result};
use crate::geometry::{read_pts, write_pts, GrayImage, Point, Shape};
use crate::training::Sample;

pub const MANIFEST: &str = "manifest.txt";

/// Writes images, landmark files and the manifest.
pub fn write_dataset(dir: &Path, samples: &[Sample]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for s in samples {
        let image = format!("{}.pgm", s.id);
        let pts = format!("{}.pts", s.id);
        write_pgm(&dir.join(&image), &s.image)?;
        write_pts(&dir.join(&pts), &s.gt)?;
        manifest.push_str(&format!("{image} {pts}\n"));
    }
    let path = dir.join(MANIFEST);
    std::fs::write(&path, manifest).map_err(|e| Error::io(path, e))
}

fn manifest_entries(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let path = dir.join(MANIFEST);
    if path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(img), Some(pts), None) => out.push((dir.join(img), dir.join(pts))),
                _ => {
                    return Err(Error::Parse {
                        file: path.clone(),
                        line: i + 1,
                        msg: format!("expected `<image> <pts>`, found `{line}`"),
                    })
                }
            }
        }
        return Ok(out);
    }
    // no manifest: pair every .pts with a same-stem .pgm
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e == "pts") {
            out.push((p.with_extension("pgm"), p));
        }
    }
    out.sort();
    Ok(out)
}

/// Square crop around the landmarks (bounding box enlarged by `margin` on
/// every side, relative to its larger side), resampled to `side × side`.
pub fn canonical_crop(image: &GrayImage, points: &[Point], side: usize, margin: f64) -> (GrayImage, Vec<Point>) {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let extent = (x1 - x0).max(y1 - y0).max(1.0) * (1.0 + 2.0 * margin);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let k = extent / side as f64;
    let (ox, oy) = (cx - extent / 2.0, cy - extent / 2.0);
    let mut data = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let sx = ox + (x as f64 + 0.5) * k - 0.5;
            let sy = oy + (y as f64 + 0.5) * k - 0.5;
            data.push(image.sample_bilinear(sx, sy).round().clamp(0.0, 255.0) as u8);
        }
    }
    let mapped = points
        .iter()
        .map(|p| Point::new((p.x - ox + 0.5) / k - 0.5, (p.y - oy + 0.5) / k - 0.5))
        .collect();
    (
        GrayImage {
            width: side,
            height: side,
            data,
        },
        mapped,
    )
}

/// Loads a directory of PGM + `.pts` pairs. Images that are not already
/// `side × side` are cropped around their landmarks and resampled; shapes
/// are placed in `frame`.
pub fn load_pts_dataset(dir: &Path, side: usize, frame: usize, landmarks: usize) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (image_path, pts_path) in manifest_entries(dir)? {
        let points = read_pts(&pts_path)?;
        if points.len() != landmarks {
            return Err(Error::Parse {
                file: pts_path,
                line: 2,
                msg: format!("expected {landmarks} points, found {}", points.len()),
            });
        }
        let image = read_pgm(&image_path)?;
        let (image, points) = if image.width == side && image.height == side {
            (image, points)
        } else {
            canonical_crop(&image, &points, side, 0.2)
        };
        let id = pts_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.push(Sample {
            id,
            image,
            gt: Shape::new(points, frame)?,
        });
    }
    Ok(out)
}
