//! Binary model container, little-endian throughout:
//!
//! | field                | encoding                                   |
//! |----------------------|--------------------------------------------|
//! | magic                | 8 bytes `SELCASC\0`                        |
//! | version              | `u32` (currently 1)                        |
//! | config               | `u32` byte length + `key=value` UTF-8 text |
//! | mean face            | `u32` point count + `2N` `f64` (x, y)      |
//! | stage count          | `u32`                                      |
//! | per stage, 12 arrays | `u64` length + `f64` values                |
//!
//! Stage arrays follow [`StageParams::tensors`] order: conv1 w/b, conv2 w/b,
//! attention w/b, recurrent w/b, landmark head w/b, error head w/b.

use std::io::{Read, Write};
use std::path::Path;

use super::config::ModelConfig;
use super::params::{ModelParams, StageParams};
use crate::error::{Error, Result};
use crate::geometry::{Point, Shape};

pub const MODEL_MAGIC: &[u8; 8] = b"SELCASC\0";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model<W: Write>(model: &ModelParams, out: &mut W) -> std::io::Result<()> {
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    let text = model.config.to_text();
    out.write_all(&(text.len() as u32).to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    out.write_all(&(model.mean_face.len() as u32).to_le_bytes())?;
    for p in &model.mean_face.points {
        out.write_all(&p.x.to_le_bytes())?;
        out.write_all(&p.y.to_le_bytes())?;
    }
    out.write_all(&(model.stages.len() as u32).to_le_bytes())?;
    for stage in &model.stages {
        for t in stage.tensors() {
            out.write_all(&(t.len() as u64).to_le_bytes())?;
            for v in t {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

struct Reader<'a, R> {
    inner: &'a mut R,
}

impl<R: Read> Reader<'_, R> {
    fn bytes<const K: usize>(&mut self) -> std::io::Result<[u8; K]> {
        let mut buf = [0u8; K];
        self.inner.read_exact(&mut buf)?;
        Ok(buf)
    }
    fn u32(&mut self) -> std::io::Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> std::io::Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> std::io::Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_model<R: Read>(input: &mut R) -> Result<ModelParams> {
    let corrupt = |e: std::io::Error| Error::Config(format!("truncated or unreadable model: {e}"));
    let mut r = Reader { inner: input };
    let magic: [u8; 8] = r.bytes().map_err(corrupt)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::config("not a model file (bad magic)"));
    }
    let version = r.u32().map_err(corrupt)?;
    if version != MODEL_VERSION {
        return Err(Error::Config(format!("unsupported model version {version}")));
    }
    let len = r.u32().map_err(corrupt)? as usize;
    let mut text = vec![0u8; len];
    r.inner.read_exact(&mut text).map_err(corrupt)?;
    let text = String::from_utf8(text).map_err(|_| Error::config("model config is not UTF-8"))?;
    let config = ModelConfig::from_text(&text)?;
    let n = r.u32().map_err(corrupt)? as usize;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x = r.f64().map_err(corrupt)?;
        let y = r.f64().map_err(corrupt)?;
        points.push(Point::new(x, y));
    }
    let mean_face = Shape::new(points, 0)?;
    let count = r.u32().map_err(corrupt)? as usize;
    if count != config.iterations {
        return Err(Error::config("stage count does not match iterations"));
    }
    let mut stages = Vec::with_capacity(count);
    for _ in 0..count {
        let mut stage = StageParams::zeros(&config);
        for t in stage.tensors_mut() {
            let len = r.u64().map_err(corrupt)? as usize;
            if len != t.len() {
                return Err(Error::config("parameter array length does not match config"));
            }
            for v in t.iter_mut() {
                *v = r.f64().map_err(corrupt)?;
            }
        }
        stages.push(stage);
    }
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest).map_err(corrupt)? != 0 {
        return Err(Error::config("trailing bytes after model data"));
    }
    ModelParams::new(config, mean_face, stages)
}

pub fn save_model(model: &ModelParams, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_model(model, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&mut bytes.as_slice())
}
