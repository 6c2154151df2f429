use crate::error::{Error, Result};
use crate::geometry::markup::{self, N68, PATCHES19, PATCHES34};
use crate::geometry::NormPair;

/// Static architecture and inference settings of a cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Landmarks regressed (N).
    pub landmarks: usize,
    /// Landmarks that receive a patch, in feed order (the subset P).
    pub patch_indices: Vec<usize>,
    /// Cascade length (L); also the pyramid depth.
    pub iterations: usize,
    pub patch_size: usize,
    /// Side of the coarsest pyramid level in pixels.
    pub base_resolution: usize,
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    /// Recurrent state width (H).
    pub hidden: usize,
    /// Stop once the predicted error (NME %) is strictly below this.
    pub success_threshold: f64,
    /// Final predicted error at or above this marks the output invalid.
    pub failure_threshold: f64,
    pub norm: NormPair,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::face68(markup::patches68())
    }
}

impl ModelConfig {
    /// 68-landmark, 3-iteration configuration using the given patch subset.
    pub fn face68(patch_indices: Vec<usize>) -> Self {
        Self {
            landmarks: N68,
            patch_indices,
            iterations: 3,
            patch_size: 14,
            base_resolution: 64,
            conv1_channels: 16,
            conv2_channels: 32,
            hidden: 256,
            success_threshold: 2.4,
            failure_threshold: 10.0,
            norm: NormPair::eyes68(),
        }
    }

    pub fn face68_34() -> Self {
        Self::face68(PATCHES34.to_vec())
    }

    pub fn face68_19() -> Self {
        Self::face68(PATCHES19.to_vec())
    }

    /// Patch count (M).
    pub fn patches(&self) -> usize {
        self.patch_indices.len()
    }

    /// Spatial side of the second convolution's output map.
    pub fn conv2_side(&self) -> usize {
        (self.patch_size - 2) / 2 - 2
    }

    /// Patch descriptor length: a central half-size crop of the second
    /// convolution map concatenated with its 2×2 max-pool.
    pub fn descriptor_dim(&self) -> usize {
        let half = self.conv2_side() / 2;
        2 * half * half * self.conv2_channels
    }

    pub fn recurrent_input_dim(&self) -> usize {
        self.patches() * self.descriptor_dim() + self.hidden
    }

    /// Side of pyramid level `level`.
    pub fn level_resolution(&self, level: usize) -> usize {
        self.base_resolution << level
    }

    /// Side of the finest level; sample images have this size.
    pub fn image_resolution(&self) -> usize {
        self.level_resolution(self.iterations - 1)
    }

    /// Pyramid level of the shape produced by iteration `iteration` (0-based).
    pub fn output_frame(&self, iteration: usize) -> usize {
        (iteration + 1).min(self.iterations - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.landmarks < 2 {
            return fail(format!("need at least 2 landmarks, got {}", self.landmarks));
        }
        if self.patch_indices.is_empty() || self.patch_indices.len() > self.landmarks {
            return fail(format!(
                "patch count {} must be within 1..={}",
                self.patch_indices.len(),
                self.landmarks
            ));
        }
        if let Some(i) = self.patch_indices.iter().find(|&&i| i >= self.landmarks) {
            return fail(format!("patch index {i} out of range"));
        }
        if self.iterations == 0 {
            return fail("at least one iteration is required".into());
        }
        if self.patch_size != 14 {
            return fail(format!(
                "the feature extractor expects 14x14 patches, got {}",
                self.patch_size
            ));
        }
        if self.base_resolution == 0 || self.conv1_channels == 0 || self.conv2_channels == 0 {
            return fail("resolution and channel counts must be positive".into());
        }
        if self.hidden == 0 {
            return fail("hidden width must be positive".into());
        }
        if !(self.failure_threshold >= self.success_threshold && self.success_threshold >= 0.0) {
            return fail(format!(
                "thresholds must satisfy failure ({}) >= success ({}) >= 0",
                self.failure_threshold, self.success_threshold
            ));
        }
        if self
            .norm
            .left
            .iter()
            .chain(&self.norm.right)
            .any(|&i| i >= self.landmarks)
            || self.norm.left.is_empty()
            || self.norm.right.is_empty()
        {
            return fail("normalization groups must be nonempty and in range".into());
        }
        Ok(())
    }

    /// Stable `key=value` rendering, one key per line in a fixed order.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "landmarks={}\npatch_indices={}\niterations={}\npatch_size={}\nbase_resolution={}\n\
             conv1_channels={}\nconv2_channels={}\nhidden={}\nsuccess_threshold={}\n\
             failure_threshold={}\nnorm_left={}\nnorm_right={}\n",
            self.landmarks,
            list(&self.patch_indices),
            self.iterations,
            self.patch_size,
            self.base_resolution,
            self.conv1_channels,
            self.conv2_channels,
            self.hidden,
            self.success_threshold,
            self.failure_threshold,
            list(&self.norm.left),
            list(&self.norm.right),
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let bad = |k: &str, v: &str| Error::Config(format!("bad value `{v}` for model key `{k}`"));
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed model config line `{line}`")))?;
            let usize_of = |v: &str| v.parse::<usize>().map_err(|_| bad(k, v));
            let f64_of = |v: &str| v.parse::<f64>().map_err(|_| bad(k, v));
            let list_of = |v: &str| -> Result<Vec<usize>> {
                v.split(',').filter(|s| !s.is_empty()).map(usize_of).collect()
            };
            match k {
                "landmarks" => cfg.landmarks = usize_of(v)?,
                "patch_indices" => cfg.patch_indices = list_of(v)?,
                "iterations" => cfg.iterations = usize_of(v)?,
                "patch_size" => cfg.patch_size = usize_of(v)?,
                "base_resolution" => cfg.base_resolution = usize_of(v)?,
                "conv1_channels" => cfg.conv1_channels = usize_of(v)?,
                "conv2_channels" => cfg.conv2_channels = usize_of(v)?,
                "hidden" => cfg.hidden = usize_of(v)?,
                "success_threshold" => cfg.success_threshold = f64_of(v)?,
                "failure_threshold" => cfg.failure_threshold = f64_of(v)?,
                "norm_left" => cfg.norm.left = list_of(v)?,
                "norm_right" => cfg.norm.right = list_of(v)?,
                other => return Err(Error::Config(format!("unknown model key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
