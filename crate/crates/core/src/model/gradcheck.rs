use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::params::StageParams;
use super::stage::{stage_backward, stage_forward, StageInput};
use crate::error::Result;
use crate::geometry::{Plane, Point, Shape};
use crate::numerics::{DenseLayer, Differentiable, MmaLedger};

/// A single stage applied to one smooth synthetic image, reduced to a scalar
/// by a fixed random linear functional of its outputs. Parameters are every
/// stage tensor (declared order) followed by the incoming hidden state.
#[derive(Clone, Debug)]
pub struct StageFragment {
    pub params: StageParams,
    pub config: ModelConfig,
    pub level: Plane,
    pub shape: Shape,
    pub h_prev: Vec<f64>,
    coef_delta: Vec<f64>,
    coef_error: f64,
    coef_hidden: Vec<f64>,
}

impl StageFragment {
    pub fn random(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = StageParams::random(&config, &mut rng);
        // Unit-gain heads and non-zero biases so every path carries gradient.
        params.landmark =
            DenseLayer::fan_in_uniform(config.hidden, 2 * config.landmarks, 1.0, &mut rng);
        params.error = DenseLayer::fan_in_uniform(config.hidden, 1, 1.0, &mut rng);
        for bias in [
            &mut params.conv1.bias,
            &mut params.conv2.bias,
            &mut params.attention.bias,
            &mut params.recurrent.bias,
            &mut params.landmark.bias,
            &mut params.error.bias,
        ] {
            for b in bias.iter_mut() {
                *b = rng.random_range(-0.1..0.1);
            }
        }

        let side = config.level_resolution(0);
        let (fx, fy, phase) = (
            rng.random_range(0.05..0.3),
            rng.random_range(0.05..0.3),
            rng.random_range(0.0..6.28),
        );
        let mut data = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                let v = 0.5
                    + 0.25 * (fx * x as f64 + phase).sin()
                    + 0.2 * (fy * y as f64 - 0.5 * phase).cos()
                    + 0.05 * rng.random_range(-1.0..1.0);
                data.push(v);
            }
        }
        let level = Plane {
            width: side,
            height: side,
            data,
        };
        let margin = config.patch_size as f64;
        let points = (0..config.landmarks)
            .map(|_| {
                Point::new(
                    rng.random_range(margin..side as f64 - margin),
                    rng.random_range(margin..side as f64 - margin),
                )
            })
            .collect();
        let shape = Shape::new(points, 0)?;
        let h_prev = (0..config.hidden)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        let coef_delta = (0..2 * config.landmarks)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let coef_error = rng.random_range(-1.0..1.0);
        let coef_hidden = (0..config.hidden)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Ok(Self {
            params,
            config,
            level,
            shape,
            h_prev,
            coef_delta,
            coef_error,
            coef_hidden,
        })
    }

    fn locate(&self, index: usize) -> (usize, usize) {
        let mut offset = index;
        for (t, tensor) in self.params.tensors().iter().enumerate() {
            if offset < tensor.len() {
                return (t, offset);
            }
            offset -= tensor.len();
        }
        (12, offset)
    }

    fn inputs(&self) -> [StageInput<'_>; 1] {
        [StageInput {
            level: &self.level,
            shape: &self.shape,
        }]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Differentiable for StageFragment {
    fn param_count(&self) -> usize {
        self.params.param_count() + self.h_prev.len()
    }

    fn param(&self, index: usize) -> f64 {
        match self.locate(index) {
            (12, i) => self.h_prev[i],
            (t, i) => self.params.tensors()[t][i],
        }
    }

    fn set_param(&mut self, index: usize, value: f64) {
        match self.locate(index) {
            (12, i) => self.h_prev[i] = value,
            (t, i) => self.params.tensors_mut()[t][i] = value,
        }
    }

    fn loss(&self) -> f64 {
        let (out, _) = stage_forward(
            &self.params,
            &self.config,
            &self.inputs(),
            &self.h_prev,
            &mut MmaLedger::new(),
            false,
        )
        .expect("fragment is consistent");
        dot(&self.coef_delta, &out.delta)
            + self.coef_error * out.error[0]
            + dot(&self.coef_hidden, &out.hidden)
    }

    fn gradient(&self) -> Vec<f64> {
        let (out, cache) = stage_forward(
            &self.params,
            &self.config,
            &self.inputs(),
            &self.h_prev,
            &mut MmaLedger::new(),
            true,
        )
        .expect("fragment is consistent");
        let cache = cache.expect("requested");
        let mut grad = StageParams::zeros(&self.config);
        let d_h_prev = stage_backward(
            &self.params,
            &self.config,
            &cache,
            &out,
            &self.coef_delta,
            &[self.coef_error],
            &self.coef_hidden,
            &mut grad,
        )
        .expect("fragment is consistent");
        let mut flat = Vec::with_capacity(self.param_count());
        for tensor in grad.tensors() {
            flat.extend_from_slice(tensor);
        }
        flat.extend_from_slice(&d_h_prev);
        flat
    }

    fn kink_signature(&self) -> Option<u64> {
        let (_, cache) = stage_forward(
            &self.params,
            &self.config,
            &self.inputs(),
            &self.h_prev,
            &mut MmaLedger::new(),
            true,
        )
        .expect("fragment is consistent");
        Some(cache.expect("requested").kink_signature(&self.params))
    }
}
