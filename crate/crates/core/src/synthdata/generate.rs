use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::render::render_face;
use super::template::{expression_modes68, face_template68};
use crate::error::{Error, Result};
use crate::geometry::markup::N68;
use crate::geometry::{Point, Shape};
use crate::training::Sample;

/// Synthetic dataset parameters. Pixel quantities refer to the finest
/// pyramid level (`base_resolution · 2^(levels−1)` pixels square).
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub landmarks: usize,
    pub count: usize,
    pub seed: u64,
    pub base_resolution: usize,
    pub levels: usize,
    /// Template face width as a fraction of the image side.
    pub face_size: f64,
    /// Maximum in-plane rotation, degrees.
    pub rotation_deg: f64,
    /// Relative face-size jitter.
    pub scale_jitter: f64,
    /// Maximum center offset as a fraction of the image side.
    pub shift: f64,
    /// Maximum out-of-plane (cylindrical) head turn, radians.
    pub yaw: f64,
    /// Multiplier of the expression-mode coefficients.
    pub expression: f64,
    /// Per-landmark Gaussian jitter, pixels.
    pub shape_noise: f64,
    /// Fraction of samples drawn from the extreme-pose tail.
    pub extreme_fraction: f64,
    pub extreme_rotation_deg: f64,
    pub extreme_yaw: f64,
    /// Additive pixel noise, gray levels.
    pub image_noise: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            landmarks: N68,
            count: 100,
            seed: 0,
            base_resolution: 64,
            levels: 3,
            face_size: 0.5,
            rotation_deg: 12.0,
            scale_jitter: 0.08,
            shift: 0.04,
            yaw: 0.35,
            expression: 1.0,
            shape_noise: 0.5,
            extreme_fraction: 0.0,
            extreme_rotation_deg: 40.0,
            extreme_yaw: 0.9,
            image_noise: 4.0,
        }
    }
}

impl GeneratorConfig {
    pub fn resolution(&self) -> usize {
        self.base_resolution << (self.levels.max(1) - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.landmarks != N68 {
            return Err(Error::config(format!(
                "only the 68-point template is built in, got {} landmarks",
                self.landmarks
            )));
        }
        if self.levels == 0 || self.base_resolution == 0 {
            return Err(Error::config("resolution and level count must be positive"));
        }
        let amplitudes = [
            self.face_size,
            self.rotation_deg,
            self.scale_jitter,
            self.shift,
            self.yaw,
            self.expression,
            self.shape_noise,
            self.extreme_rotation_deg,
            self.extreme_yaw,
            self.image_noise,
        ];
        if amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::config("generator amplitudes must be finite and nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.extreme_fraction) {
            return Err(Error::config("extreme fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Pose actually drawn for a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    /// In-plane rotation, radians.
    pub rotation: f64,
    pub yaw: f64,
    pub scale: f64,
    pub extreme: bool,
}

impl Pose {
    /// Combined head-turn magnitude, radians.
    pub fn magnitude(&self) -> f64 {
        self.rotation.hypot(self.yaw)
    }
}

/// Depth of the nose landmarks (template units) for the cylindrical turn.
fn depth(i: usize) -> f64 {
    match i {
        27..=30 => 0.08 + 0.05 * (i - 27) as f64,
        31 | 35 => 0.12,
        32 | 34 => 0.16,
        33 => 0.2,
        _ => 0.0,
    }
}

/// Template placed upright and centered in the finest frame.
pub fn template_shape(config: &GeneratorConfig) -> Result<Shape> {
    let side = config.resolution() as f64;
    let c = (side - 1.0) / 2.0;
    let k = config.face_size * side;
    Shape::new(
        face_template68()
            .into_iter()
            .map(|p| Point::new(c + k * p.x, c + k * p.y))
            .collect(),
        config.levels - 1,
    )
}

fn signed_range<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let m = if hi > lo { rng.random_range(lo..hi) } else { lo };
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

fn draw_shape(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> (Vec<Point>, Pose) {
    let extreme = config.extreme_fraction > 0.0 && rng.random_bool(config.extreme_fraction);
    let (rotation, yaw) = if extreme {
        (
            signed_range(rng, config.rotation_deg, config.extreme_rotation_deg.max(config.rotation_deg)).to_radians(),
            signed_range(rng, config.yaw, config.extreme_yaw.max(config.yaw)),
        )
    } else {
        (
            signed_range(rng, 0.0, config.rotation_deg).to_radians(),
            signed_range(rng, 0.0, config.yaw),
        )
    };
    let scale = 1.0 + signed_range(rng, 0.0, config.scale_jitter);
    let amp = config.expression;
    let coeffs = [
        rng.random_range(0.0..=1.0) * amp,
        rng.random_range(-1.0..=1.0) * amp,
        rng.random_range(-1.0..=1.0) * amp,
        rng.random_range(0.0..=1.0) * amp,
    ];
    let modes = expression_modes68();
    let side = config.resolution() as f64;
    let c = (side - 1.0) / 2.0;
    let shift = (
        rng.random_range(-1.0..=1.0) * config.shift * side,
        rng.random_range(-1.0..=1.0) * config.shift * side,
    );
    let k = config.face_size * side * scale;
    let (s, co) = rotation.sin_cos();
    const RADIUS: f64 = 0.55;
    let mut pts: Vec<Point> = face_template68()
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut q = p;
            for (m, a) in modes.iter().zip(coeffs) {
                q.x += a * m[i].x;
                q.y += a * m[i].y;
            }
            if yaw != 0.0 {
                let phi = (q.x / RADIUS).clamp(-1.0, 1.0).asin();
                q.x = RADIUS * (phi + yaw).sin() + depth(i) * yaw.sin();
            }
            let (x, y) = (k * q.x, k * q.y);
            Point::new(c + co * x - s * y + shift.0, c + s * x + co * y + shift.1)
        })
        .collect();
    if config.shape_noise > 0.0 {
        let normal = Normal::new(0.0, config.shape_noise).expect("finite sigma");
        for p in &mut pts {
            p.x += normal.sample(rng);
            p.y += normal.sample(rng);
        }
    }
    // keep every landmark inside the image by shrinking about the center
    let margin = 2.0;
    let fits = |pts: &[Point]| {
        pts.iter()
            .all(|p| p.x >= margin && p.y >= margin && p.x <= side - 1.0 - margin && p.y <= side - 1.0 - margin)
    };
    while !fits(&pts) {
        for p in &mut pts {
            p.x = c + 0.95 * (p.x - c);
            p.y = c + 0.95 * (p.y - c);
        }
    }
    (
        pts,
        Pose {
            rotation,
            yaw,
            scale,
            extreme,
        },
    )
}

fn sample_rng(config: &GeneratorConfig, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Ground-truth shape of sample `index` without rendering its image.
pub fn generate_shape(config: &GeneratorConfig, index: usize) -> Result<(Shape, Pose)> {
    config.validate()?;
    let (pts, pose) = draw_shape(config, &mut sample_rng(config, index));
    Ok((Shape::new(pts, config.levels - 1)?, pose))
}

/// One sample and the pose it was drawn with; depends only on
/// `(config, index)`.
pub fn generate_sample(config: &GeneratorConfig, index: usize) -> Result<(Sample, Pose)> {
    config.validate()?;
    let mut rng = sample_rng(config, index);
    let (pts, pose) = draw_shape(config, &mut rng);
    let image = render_face(&pts, config.resolution(), config.image_noise, &mut rng);
    Ok((
        Sample {
            id: format!("synth_{index:05}"),
            image,
            gt: Shape::new(pts, config.levels - 1)?,
        },
        pose,
    ))
}

pub fn generate_with_poses(config: &GeneratorConfig) -> Result<Vec<(Sample, Pose)>> {
    (0..config.count).map(|i| generate_sample(config, i)).collect()
}

pub fn generate_dataset(config: &GeneratorConfig) -> Result<Vec<Sample>> {
    Ok(generate_with_poses(config)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}
