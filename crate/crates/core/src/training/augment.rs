use rand::Rng;

use super::sample::Sample;
use crate::geometry::markup::{flip_permutation68, N68};
use crate::geometry::{GrayImage, Point, Shape};

/// Probabilities and ranges of the random augmentations. Each transform is
/// drawn independently with its own probability.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentParams {
    pub flip_prob: f64,
    pub rotation_prob: f64,
    /// Maximum in-plane rotation, degrees.
    pub rotation_max_deg: f64,
    pub scale_prob: f64,
    /// Range of the independent x/y scale factors.
    pub scale_range: (f64, f64),
    pub shear_prob: f64,
    pub shear_max: f64,
    pub bbox_prob: f64,
    /// Box shift and rescale, as a fraction of the face box size.
    pub bbox_fraction: f64,
    pub intensity_prob: f64,
    pub contrast_range: (f64, f64),
    /// In gray levels.
    pub brightness_max: f64,
    pub gamma_range: (f64, f64),
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            flip_prob: 0.5,
            rotation_prob: 0.5,
            rotation_max_deg: 30.0,
            scale_prob: 0.5,
            scale_range: (0.6, 1.4),
            shear_prob: 0.5,
            shear_max: 0.3,
            bbox_prob: 0.5,
            bbox_fraction: 0.05,
            intensity_prob: 0.5,
            contrast_range: (0.7, 1.3),
            brightness_max: 20.0,
            gamma_range: (0.7, 1.4),
        }
    }
}

impl AugmentParams {
    pub fn disabled() -> Self {
        Self {
            flip_prob: 0.0,
            rotation_prob: 0.0,
            scale_prob: 0.0,
            shear_prob: 0.0,
            bbox_prob: 0.0,
            intensity_prob: 0.0,
            ..Self::default()
        }
    }
}

/// A concrete draw of every augmentation. Geometry is
/// `p' = box_scale · R(rotation) · Shear · diag(scale) · (p − c) + c + shift`
/// about the image center `c`, after the optional mirror.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Augmentation {
    pub flip: bool,
    /// Radians.
    pub rotation: f64,
    pub scale: (f64, f64),
    pub shear: f64,
    pub box_scale: f64,
    pub shift: (f64, f64),
    pub contrast: f64,
    pub brightness: f64,
    pub gamma: f64,
}

impl Default for Augmentation {
    fn default() -> Self {
        Self {
            flip: false,
            rotation: 0.0,
            scale: (1.0, 1.0),
            shear: 0.0,
            box_scale: 1.0,
            shift: (0.0, 0.0),
            contrast: 1.0,
            brightness: 0.0,
            gamma: 1.0,
        }
    }
}

fn range<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl Augmentation {
    /// Draws an augmentation; `box_size` scales the box perturbation.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, params: &AugmentParams, box_size: f64) -> Self {
        let mut a = Self::default();
        if rng.random_bool(params.flip_prob.clamp(0.0, 1.0)) {
            a.flip = true;
        }
        if rng.random_bool(params.rotation_prob.clamp(0.0, 1.0)) {
            let m = params.rotation_max_deg.to_radians();
            a.rotation = range(rng, (-m, m));
        }
        if rng.random_bool(params.scale_prob.clamp(0.0, 1.0)) {
            a.scale = (range(rng, params.scale_range), range(rng, params.scale_range));
        }
        if rng.random_bool(params.shear_prob.clamp(0.0, 1.0)) {
            a.shear = range(rng, (-params.shear_max, params.shear_max));
        }
        if rng.random_bool(params.bbox_prob.clamp(0.0, 1.0)) {
            let f = params.bbox_fraction;
            a.box_scale = range(rng, (1.0 - f, 1.0 + f));
            a.shift = (
                range(rng, (-f, f)) * box_size,
                range(rng, (-f, f)) * box_size,
            );
        }
        if rng.random_bool(params.intensity_prob.clamp(0.0, 1.0)) {
            a.contrast = range(rng, params.contrast_range);
            a.brightness = range(rng, (-params.brightness_max, params.brightness_max));
            a.gamma = range(rng, params.gamma_range);
        }
        a
    }

    /// Linear part of the geometric map, row-major 2×2.
    fn matrix(&self) -> [f64; 4] {
        let (s, c) = self.rotation.sin_cos();
        let (sx, sy) = self.scale;
        // Shear · diag(sx, sy) = [[sx, shear·sy], [0, sy]]
        let (a, b, d) = (sx, self.shear * sy, sy);
        let k = self.box_scale;
        [
            k * c * a,
            k * (c * b - s * d),
            k * s * a,
            k * (s * b + c * d),
        ]
    }

    fn is_warp(&self) -> bool {
        self.matrix() != [1.0, 0.0, 0.0, 1.0] || self.shift != (0.0, 0.0)
    }

    fn is_photometric(&self) -> bool {
        self.contrast != 1.0 || self.brightness != 0.0 || self.gamma != 1.0
    }

    /// Forward map of a point in an image of the given size (mirror excluded).
    pub fn map_point(&self, p: Point, width: usize, height: usize) -> Point {
        let m = self.matrix();
        let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        let (x, y) = (p.x - cx, p.y - cy);
        Point::new(
            m[0] * x + m[1] * y + cx + self.shift.0,
            m[2] * x + m[3] * y + cy + self.shift.1,
        )
    }

    /// Applies the augmentation to image and landmarks. Mirroring needs the
    /// 68-point symmetry table and is skipped for other markups.
    pub fn apply(&self, sample: &Sample) -> Sample {
        let (w, h) = (sample.image.width, sample.image.height);
        let mut image = sample.image.clone();
        let mut points = sample.gt.points.clone();
        if self.flip && points.len() == N68 {
            image = mirror(&image);
            let perm = flip_permutation68();
            points = perm
                .iter()
                .map(|&j| Point::new(w as f64 - 1.0 - points[j].x, points[j].y))
                .collect();
        }
        if self.is_warp() {
            image = self.warp(&image);
            for p in &mut points {
                *p = self.map_point(*p, w, h);
            }
        }
        if self.is_photometric() {
            for v in &mut image.data {
                let x = (*v as f64 / 255.0).powf(self.gamma);
                *v = (255.0 * x * self.contrast + self.brightness).round().clamp(0.0, 255.0) as u8;
            }
        }
        Sample {
            id: sample.id.clone(),
            image,
            gt: Shape {
                points,
                frame: sample.gt.frame,
            },
        }
    }

    fn warp(&self, src: &GrayImage) -> GrayImage {
        let m = self.matrix();
        let det = m[0] * m[3] - m[1] * m[2];
        let inv = [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det];
        let (cx, cy) = ((src.width as f64 - 1.0) / 2.0, (src.height as f64 - 1.0) / 2.0);
        let mut data = Vec::with_capacity(src.width * src.height);
        for qy in 0..src.height {
            for qx in 0..src.width {
                let x = qx as f64 - cx - self.shift.0;
                let y = qy as f64 - cy - self.shift.1;
                let sx = inv[0] * x + inv[1] * y + cx;
                let sy = inv[2] * x + inv[3] * y + cy;
                data.push(src.sample_bilinear(sx, sy).round().clamp(0.0, 255.0) as u8);
            }
        }
        GrayImage {
            width: src.width,
            height: src.height,
            data,
        }
    }
}

fn mirror(image: &GrayImage) -> GrayImage {
    let mut data = Vec::with_capacity(image.data.len());
    for row in image.data.chunks_exact(image.width) {
        data.extend(row.iter().rev());
    }
    GrayImage {
        width: image.width,
        height: image.height,
        data,
    }
}

/// Side of the ground truth's axis-aligned bounding box (max of w, h).
pub fn box_size(shape: &Shape) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &shape.points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    (x1 - x0).max(y1 - y0)
}

/// Draws and applies one augmentation.
pub fn augment<R: Rng + ?Sized>(sample: &Sample, rng: &mut R, params: &AugmentParams) -> Sample {
    Augmentation::sample(rng, params, box_size(&sample.gt)).apply(sample)
}
