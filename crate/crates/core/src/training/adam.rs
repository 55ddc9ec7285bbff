use crate::error::{NrpaError, Result};
use crate::model::{Gradients, ModelParams, ParamId};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam with bias correction. Moments mirror the parameter layout.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    first: ModelParams,
    second: ModelParams,
    steps: u64,
}

impl Adam {
    pub fn new(params: &ModelParams, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            first: params.zeros_like(),
            second: params.zeros_like(),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Updates the tensors in `trainable`; the rest are left untouched. The
    /// `PAD` embedding row is re-zeroed afterwards.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients, trainable: &[ParamId]) -> Result<()> {
        if !params.shape_matches(grads) || !params.shape_matches(&self.first) {
            return Err(NrpaError::Shape(format!(
                "optimizer state {:?} vs parameters {:?} vs gradients {:?}",
                self.first.dims, params.dims, grads.dims
            )));
        }
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        let lr = self.learning_rate;
        for &id in trainable {
            let g = grads.tensor(id);
            let m = self.first.tensor_mut(id);
            let v = self.second.tensor_mut(id);
            let theta = params.tensor_mut(id);
            for k in 0..theta.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                theta[k] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
            }
        }
        params.pin_padding();
        Ok(())
    }
}
