use crate::model::ModelParams;

/// Adam with bias-corrected moments over every stage tensor of a model.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(model: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = model
            .stages
            .iter()
            .flat_map(|s| s.tensors().map(|t| vec![0.0; t.len()]))
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            second: zeros.clone(),
            first: zeros,
        }
    }

    pub fn steps(&self) -> u32 {
        self.step
    }

    /// One update with learning rate `lr`; `grads` has the layout of `model`.
    pub fn update(&mut self, model: &mut ModelParams, grads: &ModelParams, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        let params = model.stages.iter_mut().flat_map(|s| s.tensors_mut());
        let grads = grads.stages.iter().flat_map(|s| s.tensors());
        for (((p, g), m), v) in params
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + self.epsilon);
            }
        }
    }
}
