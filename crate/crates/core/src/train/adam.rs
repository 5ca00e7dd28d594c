use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{GradientTape, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments, shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams, config: AdamConfig) -> Self {
        Self {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, params: &mut ModelParams, tape: &GradientTape) -> Result<()> {
        params.check_same_shape(&tape.grads)?;
        params.check_same_shape(&self.m)?;
        self.t += 1;
        let AdamConfig { learning_rate, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (((theta, g), m), v) in params
            .slices_mut()
            .into_iter()
            .zip(tape.grads.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
        {
            for i in 0..theta.len() {
                let gi = g[i];
                if gi == 0.0 && m[i] == 0.0 && v[i] == 0.0 {
                    continue;
                }
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                theta[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FieldSchema;
    use crate::model::{ModelConfig, Mode};
    use crate::numeric::Rng;

    fn params() -> ModelParams {
        let config = ModelConfig { embedding_dim: 2, mode: Mode::Shallow, ..ModelConfig::default() };
        let schema = FieldSchema::categorical(3, 4).unwrap();
        ModelParams::init(&config.layout(3).unwrap(), &schema, &mut Rng::new(1))
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = params();
        let before = p.clone();
        let mut state = AdamState::new(&p, AdamConfig::default());
        let tape = GradientTape::zeros_like(&p);
        for _ in 0..3 {
            state.step(&mut p, &tape).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(state.t, 3);
    }

    #[test]
    fn first_step_with_unit_gradient() {
        let mut p = params();
        let before = p.clone();
        let config = AdamConfig { learning_rate: 0.01, ..AdamConfig::default() };
        let mut state = AdamState::new(&p, config);
        let mut tape = GradientTape::zeros_like(&p);
        for s in tape.grads.slices_mut() {
            s.fill(1.0);
        }
        state.step(&mut p, &tape).unwrap();
        let expected = 0.01 / (1.0 + 1e-8);
        for (a, b) in p.slices().iter().zip(before.slices()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!(((y - x) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scalar_quadratic_converges() {
        // Same recurrence on f(θ) = θ² with gradient 2θ, using the optimizer on
        // the bias block only.
        let mut p = params();
        for s in p.slices_mut() {
            s.fill(0.0);
        }
        p.bias = 1.0;
        let mut state = AdamState::new(&p, AdamConfig { learning_rate: 0.1, ..AdamConfig::default() });
        let mut tape = GradientTape::zeros_like(&p);
        for _ in 0..100 {
            tape.grads.bias = 2.0 * p.bias;
            state.step(&mut p, &tape).unwrap();
        }
        assert!(p.bias.abs() < 0.1, "{}", p.bias);

        let (mut theta, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=100 {
            let g = 2.0 * theta;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let m_hat = m / (1.0 - 0.9f64.powi(t));
            let v_hat = v / (1.0 - 0.999f64.powi(t));
            theta -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        }
        assert!((p.bias - theta).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = params();
        let other = {
            let config = ModelConfig { embedding_dim: 3, mode: Mode::Shallow, ..ModelConfig::default() };
            let schema = FieldSchema::categorical(3, 4).unwrap();
            ModelParams::zeros(&config.layout(3).unwrap(), &schema)
        };
        let mut state = AdamState::new(&p, AdamConfig::default());
        assert!(state.step(&mut p, &GradientTape { grads: other }).is_err());
    }
}
