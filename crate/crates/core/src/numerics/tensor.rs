use crate::error::{Error, Result};

/// A single `height × width × channels` map stored row-major as `(h, w, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::config(format!(
                "tensor data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// `n` maps of identical dimensions stored back to back.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorBatch {
    pub n: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl TensorBatch {
    pub fn new(
        n: usize,
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != n * height * width * channels {
            return Err(Error::config(format!(
                "batch data length {} does not match {n}x{height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            n,
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(n: usize, height: usize, width: usize, channels: usize) -> Self {
        Self {
            n,
            height,
            width,
            channels,
            data: vec![0.0; n * height * width * channels],
        }
    }

    /// Number of scalars in one item.
    #[inline]
    pub fn item_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn item(&self, i: usize) -> &[f64] {
        let len = self.item_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn item_mut(&mut self, i: usize) -> &mut [f64] {
        let len = self.item_len();
        &mut self.data[i * len..(i + 1) * len]
    }

    pub fn same_dims(&self, other: &TensorBatch) -> bool {
        self.n == other.n
            && self.height == other.height
            && self.width == other.width
            && self.channels == other.channels
    }

    pub fn into_single(self) -> Result<Tensor3> {
        if self.n != 1 {
            return Err(Error::config(format!(
                "expected a batch of one, got {}",
                self.n
            )));
        }
        Tensor3::new(self.height, self.width, self.channels, self.data)
    }
}

impl From<Tensor3> for TensorBatch {
    fn from(t: Tensor3) -> Self {
        Self {
            n: 1,
            height: t.height,
            width: t.width,
            channels: t.channels,
            data: t.data,
        }
    }
}

impl From<&Tensor3> for TensorBatch {
    fn from(t: &Tensor3) -> Self {
        t.clone().into()
    }
}
