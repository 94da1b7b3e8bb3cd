use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(params: AdamParams, size: usize) -> Self {
        Self {
            params,
            m: vec![0.0; size],
            v: vec![0.0; size],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, weights: &mut [f64], grads: &[f64]) {
        assert_eq!(weights.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let AdamParams { lr, beta1, beta2, eps } = self.params;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (((w, &g), m), v) in weights.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut adam = Adam::new(AdamParams::default(), 4);
        let mut w = vec![1.0, 1.0, 1.0, 1.0];
        adam.step(&mut w, &[0.3, -2.0, 1e-3, 50.0]);
        let expected = [1.0 - 1e-3, 1.0 + 1e-3, 1.0 - 1e-3, 1.0 - 1e-3];
        for (got, want) in w.iter().zip(expected) {
            // eps makes the step a hair smaller than lr for tiny gradients.
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut adam = Adam::new(AdamParams::default(), 2);
        let mut w = vec![0.5, -0.5];
        adam.step(&mut w, &[0.0, 0.0]);
        assert_eq!(w, vec![0.5, -0.5]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut adam = Adam::new(AdamParams { lr: 0.05, ..AdamParams::default() }, 2);
        let mut w = vec![3.0, -2.0];
        for _ in 0..2000 {
            let g = [2.0 * (w[0] - 1.0), 2.0 * (w[1] + 0.5)];
            adam.step(&mut w, &g);
        }
        assert!((w[0] - 1.0).abs() < 1e-3 && (w[1] + 0.5).abs() < 1e-3, "{w:?}");
    }
}
