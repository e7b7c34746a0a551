use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(dim: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step_proximal(params, grad, 0.0);
    }

    /// Adam step on the smooth gradient followed by the proximal map of
    /// `l1_weight * |w|` in Adam's per-coordinate metric, i.e. soft-thresholding
    /// each coordinate by its effective step size times `l1_weight`.
    pub fn step_proximal(&mut self, params: &mut [f64], grad: &[f64], l1_weight: f64) {
        debug_assert_eq!(params.len(), grad.len());
        self.step += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            let rate = self.learning_rate / (sqrt(v_hat) + self.epsilon);
            *p -= rate * m_hat;
            if l1_weight > 0.0 {
                let shrink = rate * l1_weight;
                *p = if *p > shrink {
                    *p - shrink
                } else if *p < -shrink {
                    *p + shrink
                } else {
                    0.0
                };
            }
        }
    }
}
