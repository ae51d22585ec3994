use super::mlp::{Gradients, Mlp};
use super::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    /// Keras 2.x defaults.
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Adam with the bias correction folded into the step size:
/// `lr_t = lr * sqrt(1 - beta2^t) / (1 - beta1^t)` and
/// `p -= lr_t * m / (sqrt(v) + epsilon)`.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    config: AdamConfig,
    step: u64,
    first: Vec<T>,
    second: Vec<T>,
}

impl<T: Real> Adam<T> {
    pub fn new(model: &Mlp<T>, config: AdamConfig) -> Self {
        let n = model.param_count();
        Self {
            config,
            step: 0,
            first: vec![T::zero(); n],
            second: vec![T::zero(); n],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, model: &mut Mlp<T>, grads: &Gradients<T>) {
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let lr_t = c.learning_rate * (1.0 - c.beta2.powi(t)).sqrt() / (1.0 - c.beta1.powi(t));
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (one_b1, one_b2) = (T::from_f64(1.0 - c.beta1), T::from_f64(1.0 - c.beta2));
        let (lr_t, eps) = (T::from_f64(lr_t), T::from_f64(c.epsilon));
        for (((p, &g), m), v) in model
            .params_mut()
            .zip(grads.params())
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            *p -= lr_t * *m / (v.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut model = Mlp::<f64>::new(&[2, 2], 0).unwrap();
        let before: Vec<f64> = model.params().copied().collect();
        let mut grads = Gradients::zeros_like(&model);
        grads.layers[0].weights = vec![0.5, -2.0, 0.0, 1e-3];
        let mut adam = Adam::new(&model, AdamConfig::default());
        adam.update(&mut model, &grads);
        let after: Vec<f64> = model.params().copied().collect();
        // With bias correction the first step is lr * g / (|g| + eps_hat).
        let expect = [-0.001, 0.001, 0.0, -0.001];
        for i in 0..4 {
            assert!((after[i] - before[i] - expect[i]).abs() < 1e-5, "{i}");
        }
        assert_eq!(adam.steps(), 1);
    }
}
