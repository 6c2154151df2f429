use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::geometry::Shape;
use crate::numerics::{ConvLayer, DenseLayer};

/// Initialization gain of the two output heads relative to a unit-variance
/// fan-in init; keeps the first displacements within a few pixels.
pub const HEAD_INIT_GAIN: f64 = 0.01;

/// Parameters of one cascade iteration. Iterations never share weights.
#[derive(Clone, Debug, PartialEq)]
pub struct StageParams {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    /// Local patch attention, `d → d`, shared by all patches of the stage.
    pub attention: DenseLayer,
    /// `(M·d + H) → H`, followed by tanh.
    pub recurrent: DenseLayer,
    /// `H → 2N` interleaved `(x, y)` displacements in units of the output level width.
    pub landmark: DenseLayer,
    /// `H → 1` predicted NME in percent.
    pub error: DenseLayer,
}

impl StageParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.descriptor_dim();
        Self {
            conv1: ConvLayer::zeros(3, 1, config.conv1_channels),
            conv2: ConvLayer::zeros(3, config.conv1_channels, config.conv2_channels),
            attention: DenseLayer::zeros(d, d),
            recurrent: DenseLayer::zeros(config.recurrent_input_dim(), config.hidden),
            landmark: DenseLayer::zeros(config.hidden, 2 * config.landmarks),
            error: DenseLayer::zeros(config.hidden, 1),
        }
    }

    pub(crate) fn random(config: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let d = config.descriptor_dim();
        Self {
            conv1: ConvLayer::fan_in_uniform(3, 1, config.conv1_channels, rng),
            conv2: ConvLayer::fan_in_uniform(3, config.conv1_channels, config.conv2_channels, rng),
            attention: DenseLayer::fan_in_uniform(d, d, 1.0, rng),
            recurrent: DenseLayer::fan_in_uniform(
                config.recurrent_input_dim(),
                config.hidden,
                1.0,
                rng,
            ),
            landmark: DenseLayer::fan_in_uniform(
                config.hidden,
                2 * config.landmarks,
                HEAD_INIT_GAIN,
                rng,
            ),
            error: DenseLayer::fan_in_uniform(config.hidden, 1, HEAD_INIT_GAIN, rng),
        }
    }

    /// Parameter arrays in their declared (serialization) order.
    pub fn tensors(&self) -> [&[f64]; 12] {
        [
            &self.conv1.weights,
            &self.conv1.bias,
            &self.conv2.weights,
            &self.conv2.bias,
            &self.attention.weights,
            &self.attention.bias,
            &self.recurrent.weights,
            &self.recurrent.bias,
            &self.landmark.weights,
            &self.landmark.bias,
            &self.error.weights,
            &self.error.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 12] {
        [
            &mut self.conv1.weights,
            &mut self.conv1.bias,
            &mut self.conv2.weights,
            &mut self.conv2.bias,
            &mut self.attention.weights,
            &mut self.attention.bias,
            &mut self.recurrent.weights,
            &mut self.recurrent.bias,
            &mut self.landmark.weights,
            &mut self.landmark.bias,
            &mut self.error.weights,
            &mut self.error.bias,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let want = Self::zeros(config);
        for (have, want) in self.tensors().iter().zip(want.tensors()) {
            if have.len() != want.len() {
                return Err(Error::config(
                    "stage parameter sizes do not match the model configuration",
                ));
            }
        }
        self.conv1.validate()?;
        self.conv2.validate()?;
        Ok(())
    }
}

/// A complete cascade: configuration, initial shape and one stage per iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// Initial estimate in the level-0 frame.
    pub mean_face: Shape,
    pub stages: Vec<StageParams>,
}

impl ModelParams {
    pub fn new(config: ModelConfig, mean_face: Shape, stages: Vec<StageParams>) -> Result<Self> {
        let m = Self {
            config,
            mean_face,
            stages,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.mean_face.len() != self.config.landmarks || self.mean_face.frame != 0 {
            return Err(Error::config(
                "mean face must hold N landmarks in the level-0 frame",
            ));
        }
        if self.stages.len() != self.config.iterations {
            return Err(Error::config(format!(
                "{} stages for {} iterations",
                self.stages.len(),
                self.config.iterations
            )));
        }
        self.stages
            .iter()
            .try_for_each(|s| s.validate(&self.config))
    }

    /// Model with every weight and bias zero.
    pub fn zeros(config: ModelConfig, mean_face: Shape) -> Result<Self> {
        let stages = (0..config.iterations)
            .map(|_| StageParams::zeros(&config))
            .collect();
        Self::new(config, mean_face, stages)
    }

    /// Same-shaped container with all values zero, used for gradients.
    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            mean_face: self.mean_face.clone(),
            stages: self.stages.iter().map(|_| StageParams::zeros(&self.config)).collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.stages.iter().map(StageParams::param_count).sum()
    }
}

/// Deterministic initialization: fan-in scaled uniform weights, zero biases.
pub fn init_params(seed: u64, config: ModelConfig, mean_face: Shape) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stages = (0..config.iterations)
        .map(|_| StageParams::random(&config, &mut rng))
        .collect();
    ModelParams::new(config, mean_face, stages)
}
