/// Element-wise nonlinearities used by the stage network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn apply_in_place(self, values: &mut [f64]) {
        for v in values {
            *v = self.eval(*v);
        }
    }

    /// Multiplies `grad` in place by the local derivative at `output`.
    pub fn backward_in_place(self, output: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(output.len(), grad.len());
        for (g, &y) in grad.iter_mut().zip(output) {
            *g *= self.derivative_from_output(y);
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Applies `kind` element-wise, returning a new buffer.
pub fn activation(kind: Activation, input: &[f64]) -> Vec<f64> {
    input.iter().map(|&x| kind.eval(x)).collect()
}
