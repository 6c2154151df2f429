use crate::error::{Error, Result};

/// 8-bit single-channel image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::config(format!(
                "image buffer of {} bytes for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Bilinear sample with zero outside the image; coordinates address
    /// pixel centers at integer positions.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let px = |xx: i64, yy: i64| -> f64 {
            if xx < 0 || yy < 0 || xx >= self.width as i64 || yy >= self.height as i64 {
                0.0
            } else {
                self.data[yy as usize * self.width + xx as usize] as f64
            }
        };
        let top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
        let bottom = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Floating-point single-channel image with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn from_gray(image: &GrayImage) -> Self {
        Self {
            width: image.width,
            height: image.height,
            data: image.data.iter().map(|&v| v as f64 / 255.0).collect(),
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// 2×2 box average.
    pub fn downsample(&self) -> Result<Plane> {
        if self.width % 2 != 0 || self.height % 2 != 0 {
            return Err(Error::config(format!(
                "cannot halve a {}x{} image",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            let r0 = &self.data[2 * y * self.width..(2 * y + 1) * self.width];
            let r1 = &self.data[(2 * y + 1) * self.width..(2 * y + 2) * self.width];
            for x in 0..w {
                data.push(0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]));
            }
        }
        Ok(Plane {
            width: w,
            height: h,
            data,
        })
    }
}

/// Resolution pyramid; level 0 is the coarsest and every level doubles the
/// previous one in both dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePyramid {
    levels: Vec<Plane>,
}

impl ImagePyramid {
    /// Builds `count` levels by repeated box-averaging of `finest`.
    pub fn build(finest: &GrayImage, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::config("a pyramid needs at least one level"));
        }
        let mut levels = vec![Plane::from_gray(finest)];
        for _ in 1..count {
            let next = levels.last().expect("nonempty").downsample()?;
            levels.push(next);
        }
        levels.reverse();
        Ok(Self { levels })
    }

    pub fn from_levels(levels: Vec<Plane>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::config("a pyramid needs at least one level"));
        }
        for pair in levels.windows(2) {
            if pair[1].width != 2 * pair[0].width || pair[1].height != 2 * pair[0].height {
                return Err(Error::config("pyramid levels must double in size"));
            }
        }
        Ok(Self { levels })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, index: usize) -> &Plane {
        &self.levels[index]
    }

    pub fn levels(&self) -> &[Plane] {
        &self.levels
    }
}
